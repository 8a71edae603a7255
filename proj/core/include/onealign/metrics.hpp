#pragma once

// Downstream evaluation metrics.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "onealign/tensor.hpp"

namespace onealign {

/// 1-based ranks with ties sharing the mean of their positions.
std::vector<double> average_ranks(std::span<const double> v);

/// Pearson correlation of average ranks. Throws LengthMismatch,
/// InvalidArgument (n < 2), ConstantInput.
double spearman_rho(std::span<const double> x, std::span<const double> y);

/// Mann-Whitney AUC with half credit for ties. Labels are 0/1.
/// Throws SingleClass, LengthMismatch.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// 2U for the positives (integer, exact): pairs won count 2, ties 1.
std::uint64_t mann_whitney_2u(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct FmaxResult {
  double fmax = 0.0;
  double threshold = 0.0;
};

/// Protein-centric Fmax over thresholds t/100, t = 0..100 (first maximum
/// wins). A label counts as predicted when score >= threshold. Precision
/// averages over proteins with at least one prediction, recall over proteins
/// with at least one true label. Scores must lie in [0, 1].
FmaxResult fmax(const Matrix& scores, const Matrix& labels);

/// Average precision per column with tied scores grouped; nullopt for a
/// column without positives.
std::vector<std::optional<double>> aupr_per_class(const Matrix& scores, const Matrix& labels);

/// Fraction of equal entries. Throws LengthMismatch.
double accuracy(std::span<const double> preds, std::span<const double> labels);
/// Probabilities thresholded at 0.5 (p >= 0.5 -> 1).
double binary_accuracy(std::span<const double> probs, std::span<const double> labels);
/// Row argmax (first maximum) against integer class labels.
double multiclass_accuracy(const Matrix& scores, std::span<const double> labels);

}  // namespace onealign
