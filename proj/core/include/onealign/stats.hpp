#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "onealign/tensor.hpp"

namespace onealign {

enum class Alternative { greater, less, two_sided };
enum class TestMethod { automatic, exact, normal_approx };
std::string_view to_string(Alternative a);
Alternative parse_alternative(std::string_view s);
std::string_view to_string(TestMethod m);

/// Largest n + m (rank-sum) or n (signed-rank) handled by exact enumeration.
inline constexpr std::size_t kExactCutoff = 16;

struct WilcoxonResult {
  /// Mann-Whitney U of the first sample (rank-sum) or W+ (signed-rank).
  double statistic = 0.0;
  double p_value = 1.0;
  Alternative alternative = Alternative::two_sided;
  TestMethod method = TestMethod::exact;
};

/// Two-sample rank-sum test with midranks. "greater" means x tends to exceed
/// y. Exact null distribution of the midrank sum when n + m <= 16, otherwise
/// a normal approximation with tie-corrected variance and 0.5 continuity
/// correction. Two-sided p = min(1, 2 min(p_greater, p_less)).
WilcoxonResult wilcoxon_rank_sum(std::span<const double> x, std::span<const double> y, Alternative alt,
                                 TestMethod method = TestMethod::automatic);

/// Paired signed-rank test on x - y (zero differences dropped).
WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y, Alternative alt,
                                    TestMethod method = TestMethod::automatic);

/// Type-7 (linear interpolation) quantile of sorted data, p in [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);

struct IqrSummary {
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0, iqr = 0.0;
  /// Values below q1 - 1.5 iqr.
  std::size_t outlier_count = 0;
};

IqrSummary iqr_summary(std::span<const double> values);

struct DropMatrix {
  std::vector<std::string> models;
  /// delta(x, y) = (perf_y - perf_x) / perf_x, rows x, columns y.
  Matrix delta;
};

/// Throws NonPositivePerf.
DropMatrix performance_drop_matrix(const std::vector<std::pair<std::string, double>>& perf);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

/// ROC curve with one point per distinct score (descending), starting at (0, 0).
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);


}  // namespace onealign
