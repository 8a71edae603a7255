#include "onealign/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "onealign/error.hpp"
#include "onealign/metrics.hpp"

namespace onealign {

std::string_view to_string(Alternative a) {
  switch (a) {
    case Alternative::greater: return "greater";
    case Alternative::less: return "less";
    case Alternative::two_sided: return "two_sided";
  }
  return "?";
}

Alternative parse_alternative(std::string_view s) {
  if (s == "greater") return Alternative::greater;
  if (s == "less") return Alternative::less;
  if (s == "two_sided" || s == "two-sided") return Alternative::two_sided;
  fail(ErrorCode::InvalidArgument, "unknown alternative '" + std::string(s) + "'");
}

std::string_view to_string(TestMethod m) {
  switch (m) {
    case TestMethod::automatic: return "auto";
    case TestMethod::exact: return "exact";
    case TestMethod::normal_approx: return "normal_approx";
  }
  return "?";
}

namespace {

double upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double combine(double p_greater, double p_less, Alternative alt) {
  switch (alt) {
    case Alternative::greater: return p_greater;
    case Alternative::less: return p_less;
    case Alternative::two_sided: return std::min(1.0, 2.0 * std::min(p_greater, p_less));
  }
  return 1.0;
}

// Normal-approximation tails of a statistic with mean mu and variance var.
double normal_p(double stat, double mu, double var, Alternative alt) {
  if (var <= 0.0) return 1.0;
  const double sd = std::sqrt(var);
  const double pg = upper_tail((stat - mu - 0.5) / sd);
  const double pl = 1.0 - upper_tail((stat - mu + 0.5) / sd);
  if (alt == Alternative::two_sided) {
    return std::min(1.0, 2.0 * upper_tail((std::abs(stat - mu) - 0.5) / sd));
  }
  return combine(pg, pl, alt);
}

// Sum over tie groups of t^3 - t.
double tie_term(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    const double t = static_cast<double>(j - i);
    acc += t * t * t - t;
    i = j;
  }
  return acc;
}

}  // namespace

WilcoxonResult wilcoxon_rank_sum(std::span<const double> x, std::span<const double> y, Alternative alt,
                                 TestMethod method) {
  if (x.empty() || y.empty()) fail(ErrorCode::EmptySample, "rank-sum test needs two nonempty samples");
  const std::size_t n = x.size(), m = y.size(), total = n + m;
  std::vector<double> all(x.begin(), x.end());
  all.insert(all.end(), y.begin(), y.end());
  for (double v : all) {
    if (!std::isfinite(v)) fail(ErrorCode::NonFiniteValue, "non-finite sample value");
  }
  const auto ranks = average_ranks(all);
  // Doubled midranks are integers.
  std::vector<std::uint64_t> r2(total);
  for (std::size_t i = 0; i < total; ++i) r2[i] = static_cast<std::uint64_t>(std::llround(2.0 * ranks[i]));
  std::uint64_t w2 = 0;
  for (std::size_t i = 0; i < n; ++i) w2 += r2[i];

  WilcoxonResult res;
  res.alternative = alt;
  res.statistic = (static_cast<double>(w2) - static_cast<double>(n * (n + 1))) / 2.0;
  if (method == TestMethod::automatic) method = total <= kExactCutoff ? TestMethod::exact : TestMethod::normal_approx;
  res.method = method;

  if (method == TestMethod::exact) {
    if (total > 30) fail(ErrorCode::InvalidArgument, "exact rank-sum enumeration limited to n + m <= 30");
    const std::uint64_t max_sum = std::accumulate(r2.begin(), r2.end(), std::uint64_t{0});
    // ways[k][s]: subsets of size k with doubled-rank sum s.
    std::vector<std::vector<double>> ways(n + 1, std::vector<double>(max_sum + 1, 0.0));
    ways[0][0] = 1.0;
    for (std::size_t i = 0; i < total; ++i) {
      for (std::size_t k = std::min(n, i + 1); k >= 1; --k) {
        for (std::uint64_t s = max_sum; s >= r2[i]; --s) ways[k][s] += ways[k - 1][s - r2[i]];
      }
    }
    double ge = 0.0, le = 0.0, all_ways = 0.0;
    for (std::uint64_t s = 0; s <= max_sum; ++s) {
      all_ways += ways[n][s];
      if (s >= w2) ge += ways[n][s];
      if (s <= w2) le += ways[n][s];
    }
    res.p_value = combine(ge / all_ways, le / all_ways, alt);
    return res;
  }
  const double N = static_cast<double>(total);
  const double var = static_cast<double>(n) * static_cast<double>(m) / 12.0 *
                     ((N + 1.0) - tie_term(all) / (N * (N - 1.0)));
  const double w = static_cast<double>(w2) / 2.0;
  res.p_value = normal_p(w, static_cast<double>(n) * (N + 1.0) / 2.0, var, alt);
  return res;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y, Alternative alt,
                                    TestMethod method) {
  if (x.size() != y.size()) fail(ErrorCode::LengthMismatch, "paired samples differ in length");
  std::vector<double> d, mag;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = x[i] - y[i];
    if (!std::isfinite(diff)) fail(ErrorCode::NonFiniteValue, "non-finite sample value", i);
    if (diff != 0.0) {
      d.push_back(diff);
      mag.push_back(std::abs(diff));
    }
  }
  WilcoxonResult res;
  res.alternative = alt;
  if (d.empty()) {
    if (x.empty()) fail(ErrorCode::EmptySample, "signed-rank test of empty samples");
    res.method = method == TestMethod::normal_approx ? method : TestMethod::exact;
    res.p_value = 1.0;
    return res;
  }
  const std::size_t n = d.size();
  const auto ranks = average_ranks(mag);
  std::vector<std::uint64_t> r2(n);
  std::uint64_t w2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    r2[i] = static_cast<std::uint64_t>(std::llround(2.0 * ranks[i]));
    if (d[i] > 0) w2 += r2[i];
  }
  res.statistic = static_cast<double>(w2) / 2.0;
  if (method == TestMethod::automatic) method = n <= kExactCutoff ? TestMethod::exact : TestMethod::normal_approx;
  res.method = method;
  if (method == TestMethod::exact) {
    if (n > 30) fail(ErrorCode::InvalidArgument, "exact signed-rank enumeration limited to n <= 30");
    const std::uint64_t max_sum = std::accumulate(r2.begin(), r2.end(), std::uint64_t{0});
    std::vector<double> ways(max_sum + 1, 0.0);
    ways[0] = 1.0;
    for (auto r : r2) {
      for (std::uint64_t s = max_sum; s >= r; --s) ways[s] += ways[s - r];
    }
    double ge = 0.0, le = 0.0, all_ways = 0.0;
    for (std::uint64_t s = 0; s <= max_sum; ++s) {
      all_ways += ways[s];
      if (s >= w2) ge += ways[s];
      if (s <= w2) le += ways[s];
    }
    res.p_value = combine(ge / all_ways, le / all_ways, alt);
    return res;
  }
  const double nn = static_cast<double>(n);
  const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term(mag) / 48.0;
  res.p_value = normal_p(res.statistic, nn * (nn + 1.0) / 4.0, var, alt);
  return res;
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) fail(ErrorCode::EmptySample, "quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

IqrSummary iqr_summary(std::span<const double> values) {
  if (values.empty()) fail(ErrorCode::EmptySample, "iqr of an empty sample");
  std::vector<double> v(values.begin(), values.end());
  for (double x : v) {
    if (!std::isfinite(x)) fail(ErrorCode::NonFiniteValue, "non-finite value");
  }
  std::sort(v.begin(), v.end());
  IqrSummary s;
  s.min = v.front();
  s.max = v.back();
  s.q1 = quantile_sorted(v, 0.25);
  s.median = quantile_sorted(v, 0.5);
  s.q3 = quantile_sorted(v, 0.75);
  s.iqr = s.q3 - s.q1;
  const double fence = s.q1 - 1.5 * s.iqr;
  s.outlier_count = static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [&](double x) { return x < fence; }));
  return s;
}

DropMatrix performance_drop_matrix(const std::vector<std::pair<std::string, double>>& perf) {
  DropMatrix d;
  d.delta = Matrix(perf.size(), perf.size());
  for (std::size_t i = 0; i < perf.size(); ++i) {
    if (!(perf[i].second > 0.0)) fail(ErrorCode::NonPositivePerf, perf[i].first, i);
    d.models.push_back(perf[i].first);
  }
  for (std::size_t x = 0; x < perf.size(); ++x) {
    for (std::size_t y = 0; y < perf.size(); ++y) {
      d.delta(x, y) = (perf[y].second - perf[x].second) / perf[x].second;
    }
  }
  return d;
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) fail(ErrorCode::LengthMismatch, "scores and labels differ in length");
  std::size_t pos = 0;
  for (auto l : labels) pos += l != 0;
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) fail(ErrorCode::SingleClass, "roc curve needs both classes");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<RocPoint> pts{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] ? tp : fp)++;
      ++j;
    }
    pts.push_back({scores[idx[i]], static_cast<double>(fp) / static_cast<double>(neg),
                   static_cast<double>(tp) / static_cast<double>(pos)});
    i = j;
  }
  return pts;
}

}  // namespace onealign
