#pragma once

// Supervised MLP probes on frozen embeddings and the hyperparameter sweep.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "onealign/embstore.hpp"
#include "onealign/layers.hpp"

namespace onealign {

inline constexpr std::size_t kProbeParamBudget = 1'500'000;

enum class ProbeMetric { spearman, accuracy, auc, fmax, aupr };
std::string_view to_string(ProbeMetric m);
ProbeMetric parse_probe_metric(std::string_view s);
/// spearman for regression, accuracy for binary/multiclass, fmax for multilabel.
ProbeMetric default_metric(LabelKind kind);

struct ProbeConfig {
  double lr = 1e-3;
  std::size_t batch = 32;
  std::size_t max_epochs = 50;
  std::vector<std::size_t> hidden{256};
  double dropout = 0.1;
  bool batchnorm = false;
  bool layernorm = false;
  Activation activation = Activation::relu;
  bool residual = false;
  double weight_decay = 0.01;
  /// Epochs without validation improvement before stopping.
  std::size_t patience = 10;

  std::string describe() const;
};

void to_json(nlohmann::json& j, const ProbeConfig& c);
/// Missing keys keep their defaults.
void from_json(const nlohmann::json& j, ProbeConfig& c);

/// Dense split-wise arrays for one task.
struct ProbeData {
  LabelKind kind = LabelKind::regression;
  std::size_t num_classes = 1;
  ProbeMetric metric = ProbeMetric::accuracy;
  Matrix x_train, y_train, x_val, y_val, x_test, y_test;
};

/// Joins embeddings, labels and the split file by id. Ids in the split file
/// lacking an embedding or a label raise LabelMismatch.
ProbeData make_probe_data(const EmbeddingSet& emb, const LabelTable& labels,
                          const std::map<std::string, Split>& splits, ProbeMetric metric);

struct ProbeRun {
  ProbeConfig config;
  std::uint64_t seed = 0;
  double val_metric = 0.0;
  double test_metric = 0.0;
  std::size_t epochs = 0;
  std::size_t best_epoch = 0;
  std::size_t parameters = 0;
  /// FNV-1a over the selected weights (f64 bytes).
  std::uint64_t model_digest = 0;
};

/// Trains one probe with AdamW, keeps the weights of the best validation
/// epoch and reports validation and test metrics for them.
/// Throws ParamBudgetExceeded before training above kProbeParamBudget.
ProbeRun train_probe(const ProbeData& data, const ProbeConfig& config, std::uint64_t seed);

/// Metric over prediction matrix (per kind: value, probability or class
/// probabilities) against the label matrix.
double probe_metric(ProbeMetric metric, LabelKind kind, const Matrix& preds, const Matrix& labels);

struct SweepGrid {
  std::vector<double> lr{0.001, 0.01};
  std::vector<std::size_t> batch{32, 64};
  std::size_t max_epochs = 50;
  std::vector<std::vector<std::size_t>> hidden{{256}, {512, 256}};
  std::vector<double> dropout{0.1, 0.25};
  std::vector<bool> batchnorm{true, false};
  std::vector<bool> layernorm{true, false};
  std::vector<Activation> activation{Activation::relu, Activation::gelu};
  std::vector<bool> residual{true, false};

  /// Points in enumeration order (lr slowest, residual fastest).
  std::vector<ProbeConfig> points() const;
};

struct SweepPoint {
  std::size_t config_id = 0;
  ProbeConfig config;
  std::vector<ProbeRun> runs;
  double val_mean = 0.0;
  double test_mean = 0.0;
  double test_std = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::size_t best = 0;
};

/// n_runs seeded runs per grid point (seed + r); best = argmax validation
/// mean, first point on ties. Points run in parallel when threads > 1.
SweepResult sweep(const ProbeData& data, const std::vector<ProbeConfig>& points, std::size_t n_runs,
                  std::uint64_t seed, unsigned threads = 1);

/// "x.xxx (x.xxx)"
std::string format_mean_std(double mean, double std);
/// Sample standard deviation (n - 1); 0 for a single value.
double sample_std(std::span<const double> v);

/// `task,config_id,seed,metric,value` rows plus `mean`/`std` aggregate rows.
std::string sweep_csv(const std::string& task, ProbeMetric metric, const SweepResult& result);
nlohmann::json sweep_json(const std::string& task, ProbeMetric metric, const SweepResult& result);

}  // namespace onealign
