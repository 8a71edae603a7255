#include "onealign/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "onealign/error.hpp"

namespace onealign {
namespace {

std::vector<std::size_t> order_by(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  return idx;
}

void same_length(std::size_t a, std::size_t b) {
  if (a != b) fail(ErrorCode::LengthMismatch, std::to_string(a) + " vs " + std::to_string(b));
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> v) {
  const auto idx = order_by(v);
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  same_length(x.size(), y.size());
  if (x.size() < 2) fail(ErrorCode::InvalidArgument, "spearman needs at least two points");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) fail(ErrorCode::ConstantInput, "constant input has no rank variance");
  return sxy / std::sqrt(sxx * syy);
}

std::uint64_t mann_whitney_2u(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  same_length(scores.size(), labels.size());
  const auto idx = order_by(scores);
  std::uint64_t pos = 0, rank2 = 0;  // doubled rank sum of positives
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const std::uint64_t r2 = (i + 1) + (j + 1);
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[idx[k]]) {
        ++pos;
        rank2 += r2;
      }
    }
    i = j + 1;
  }
  return rank2 - pos * (pos + 1);
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  same_length(scores.size(), labels.size());
  std::uint64_t pos = 0;
  for (auto l : labels) {
    if (l > 1) fail(ErrorCode::BadLabel, "labels must be 0 or 1");
    pos += l;
  }
  const std::uint64_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) fail(ErrorCode::SingleClass, "roc_auc needs both classes");
  return static_cast<double>(mann_whitney_2u(scores, labels)) / static_cast<double>(2 * pos * neg);
}

FmaxResult fmax(const Matrix& scores, const Matrix& labels) {
  if (scores.rows() != labels.rows() || scores.cols() != labels.cols()) {
    fail(ErrorCode::ShapeMismatch, "scores and labels differ in shape");
  }
  if (scores.rows() == 0 || scores.cols() == 0) fail(ErrorCode::EmptyLabelMatrix, "empty label matrix");
  std::vector<std::size_t> truth(scores.rows(), 0);
  std::size_t annotated = 0;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    for (std::size_t j = 0; j < scores.cols(); ++j) {
      const double s = scores(i, j), l = labels(i, j);
      if (!(s >= 0.0 && s <= 1.0)) fail(ErrorCode::InvalidArgument, "scores must lie in [0, 1]", i);
      if (l != 0.0 && l != 1.0) fail(ErrorCode::BadLabel, "labels must be 0 or 1", i);
      truth[i] += l == 1.0;
    }
    annotated += truth[i] > 0;
  }
  if (annotated == 0) fail(ErrorCode::EmptyLabelMatrix, "no positive labels");

  FmaxResult best{0.0, 0.0};
  bool first = true;
  for (int t = 0; t <= 100; ++t) {
    const double tau = static_cast<double>(t) / 100.0;
    double prec_sum = 0.0, rec_sum = 0.0;
    std::size_t predicting = 0;
    for (std::size_t i = 0; i < scores.rows(); ++i) {
      std::size_t pred = 0, tp = 0;
      for (std::size_t j = 0; j < scores.cols(); ++j) {
        if (scores(i, j) >= tau) {
          ++pred;
          tp += labels(i, j) == 1.0;
        }
      }
      if (pred > 0) {
        ++predicting;
        prec_sum += static_cast<double>(tp) / static_cast<double>(pred);
      }
      if (truth[i] > 0) rec_sum += static_cast<double>(tp) / static_cast<double>(truth[i]);
    }
    double f = 0.0;
    if (predicting > 0) {
      const double p = prec_sum / static_cast<double>(predicting);
      const double r = rec_sum / static_cast<double>(annotated);
      if (p + r > 0.0) f = 2.0 * p * r / (p + r);
    }
    if (first || f > best.fmax) {
      best = {f, tau};
      first = false;
    }
  }
  return best;
}

std::vector<std::optional<double>> aupr_per_class(const Matrix& scores, const Matrix& labels) {
  if (scores.rows() != labels.rows() || scores.cols() != labels.cols()) {
    fail(ErrorCode::ShapeMismatch, "scores and labels differ in shape");
  }
  std::vector<std::optional<double>> out(scores.cols());
  std::vector<double> col(scores.rows());
  for (std::size_t c = 0; c < scores.cols(); ++c) {
    std::size_t positives = 0;
    for (std::size_t i = 0; i < scores.rows(); ++i) {
      col[i] = -scores(i, c);  // ascending order of -s is descending score
      positives += labels(i, c) == 1.0;
    }
    if (positives == 0) continue;
    const auto idx = order_by(col);
    std::size_t tp = 0, seen = 0;
    double ap = 0.0;
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i, group_pos = 0;
      while (j < idx.size() && col[idx[j]] == col[idx[i]]) {
        group_pos += labels(idx[j], c) == 1.0;
        ++j;
      }
      tp += group_pos;
      seen += j - i;
      if (group_pos > 0) {
        ap += static_cast<double>(group_pos) / static_cast<double>(positives) *
              (static_cast<double>(tp) / static_cast<double>(seen));
      }
      i = j;
    }
    out[c] = ap;
  }
  return out;
}

double accuracy(std::span<const double> preds, std::span<const double> labels) {
  same_length(preds.size(), labels.size());
  if (preds.empty()) fail(ErrorCode::EmptySample, "accuracy of an empty set");
  std::size_t ok = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) ok += preds[i] == labels[i];
  return static_cast<double>(ok) / static_cast<double>(preds.size());
}

double binary_accuracy(std::span<const double> probs, std::span<const double> labels) {
  std::vector<double> preds(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) preds[i] = probs[i] >= 0.5 ? 1.0 : 0.0;
  return accuracy(preds, labels);
}

double multiclass_accuracy(const Matrix& scores, std::span<const double> labels) {
  same_length(scores.rows(), labels.size());
  std::vector<double> preds(scores.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    auto row = scores.row(i);
    preds[i] = static_cast<double>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return accuracy(preds, labels);
}

}  // namespace onealign
