#include "onealign/probe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <numeric>

#include "onealign/binio.hpp"
#include "onealign/error.hpp"
#include "onealign/metrics.hpp"
#include "onealign/mlp.hpp"
#include "onealign/optim.hpp"
#include "onealign/parallel.hpp"
#include "onealign/rng.hpp"

namespace onealign {

std::string_view to_string(ProbeMetric m) {
  switch (m) {
    case ProbeMetric::spearman: return "spearman";
    case ProbeMetric::accuracy: return "accuracy";
    case ProbeMetric::auc: return "auc";
    case ProbeMetric::fmax: return "fmax";
    case ProbeMetric::aupr: return "aupr";
  }
  return "?";
}

ProbeMetric parse_probe_metric(std::string_view s) {
  for (auto m : {ProbeMetric::spearman, ProbeMetric::accuracy, ProbeMetric::auc, ProbeMetric::fmax,
                 ProbeMetric::aupr}) {
    if (s == to_string(m)) return m;
  }
  fail(ErrorCode::InvalidArgument, "unknown metric '" + std::string(s) + "'");
}

ProbeMetric default_metric(LabelKind kind) {
  switch (kind) {
    case LabelKind::regression: return ProbeMetric::spearman;
    case LabelKind::multilabel: return ProbeMetric::fmax;
    default: return ProbeMetric::accuracy;
  }
}

std::string ProbeConfig::describe() const {
  std::string h;
  for (std::size_t i = 0; i < hidden.size(); ++i) h += (i ? "-" : "") + std::to_string(hidden[i]);
  char buf[160];
  std::snprintf(buf, sizeof buf, "lr=%g batch=%zu hidden=%s dropout=%g bn=%d ln=%d act=%s res=%d", lr, batch,
                h.c_str(), dropout, batchnorm, layernorm, std::string(to_string(activation)).c_str(), residual);
  return buf;
}

void to_json(nlohmann::json& j, const ProbeConfig& c) {
  j = nlohmann::json{{"lr", c.lr},
                     {"batch", c.batch},
                     {"max_epochs", c.max_epochs},
                     {"hidden", c.hidden},
                     {"dropout", c.dropout},
                     {"batchnorm", c.batchnorm},
                     {"layernorm", c.layernorm},
                     {"activation", to_string(c.activation)},
                     {"residual", c.residual},
                     {"weight_decay", c.weight_decay},
                     {"patience", c.patience}};
}

void from_json(const nlohmann::json& j, ProbeConfig& c) {
  c.lr = j.value("lr", c.lr);
  c.batch = j.value("batch", c.batch);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.hidden = j.value("hidden", c.hidden);
  c.dropout = j.value("dropout", c.dropout);
  c.batchnorm = j.value("batchnorm", c.batchnorm);
  c.layernorm = j.value("layernorm", c.layernorm);
  if (j.contains("activation")) c.activation = parse_activation(j.at("activation").get<std::string>());
  c.residual = j.value("residual", c.residual);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.patience = j.value("patience", c.patience);
}

ProbeData make_probe_data(const EmbeddingSet& emb, const LabelTable& labels,
                          const std::map<std::string, Split>& splits, ProbeMetric metric) {
  ProbeData d;
  d.kind = labels.kind;
  d.num_classes = labels.num_classes;
  d.metric = metric;
  const std::size_t width = labels.kind == LabelKind::multilabel ? labels.num_classes : 1;
  std::vector<const std::string*> ids[3];
  for (const auto& [id, split] : splits) {
    if (split == Split::unassigned) continue;
    if (!emb.find(id)) fail(ErrorCode::LabelMismatch, "no embedding for " + id);
    auto it = labels.rows.find(id);
    if (it == labels.rows.end()) fail(ErrorCode::LabelMismatch, "no label for " + id);
    if (it->second.size() != width) fail(ErrorCode::LabelMismatch, "label width for " + id);
    ids[static_cast<int>(split)].push_back(&id);
  }
  auto fill = [&](const std::vector<const std::string*>& list, Matrix& x, Matrix& y) {
    x = Matrix(list.size(), emb.dim());
    y = Matrix(list.size(), width);
    for (std::size_t r = 0; r < list.size(); ++r) {
      auto src = emb.row(*emb.find(*list[r]));
      std::copy(src.begin(), src.end(), x.row(r).begin());
      const auto& lab = labels.rows.at(*list[r]);
      std::copy(lab.begin(), lab.end(), y.row(r).begin());
    }
  };
  fill(ids[0], d.x_train, d.y_train);
  fill(ids[1], d.x_val, d.y_val);
  fill(ids[2], d.x_test, d.y_test);
  if (d.x_train.rows() == 0 || d.x_val.rows() == 0 || d.x_test.rows() == 0) {
    fail(ErrorCode::LabelMismatch, "every split needs at least one labeled item");
  }
  return d;
}

namespace {

std::size_t output_width(const ProbeData& d) {
  switch (d.kind) {
    case LabelKind::multiclass:
    case LabelKind::multilabel: return d.num_classes;
    default: return 1;
  }
}

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

// Loss gradient with respect to the logits, averaged over the batch.
Matrix loss_grad(LabelKind kind, const Matrix& z, const Matrix& y) {
  const std::size_t n = z.rows();
  Matrix g(n, z.cols());
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    switch (kind) {
      case LabelKind::regression: g(i, 0) = 2.0 * (z(i, 0) - y(i, 0)) * inv; break;
      case LabelKind::binary: g(i, 0) = (sigmoid(z(i, 0)) - y(i, 0)) * inv; break;
      case LabelKind::multilabel: {
        const double s = inv / static_cast<double>(z.cols());
        for (std::size_t c = 0; c < z.cols(); ++c) g(i, c) = (sigmoid(z(i, c)) - y(i, c)) * s;
        break;
      }
      case LabelKind::multiclass: {
        auto row = z.row(i);
        const double mx = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double v : row) sum += std::exp(v - mx);
        for (std::size_t c = 0; c < z.cols(); ++c) g(i, c) = std::exp(row[c] - mx) / sum * inv;
        g(i, static_cast<std::size_t>(y(i, 0))) -= inv;
        break;
      }
    }
  }
  return g;
}

Matrix predictions(LabelKind kind, Matrix z) {
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto row = z.row(i);
    if (kind == LabelKind::binary || kind == LabelKind::multilabel) {
      for (double& v : row) v = sigmoid(v);
    } else if (kind == LabelKind::multiclass) {
      const double mx = *std::max_element(row.begin(), row.end());
      double sum = 0.0;
      for (double& v : row) sum += (v = std::exp(v - mx));
      for (double& v : row) v /= sum;
    }
  }
  return z;
}

std::vector<double> column(const Matrix& m, std::size_t c) {
  std::vector<double> v(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) v[i] = m(i, c);
  return v;
}

std::vector<std::uint8_t> binary_column(const Matrix& m, std::size_t c) {
  std::vector<std::uint8_t> v(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) v[i] = m(i, c) == 1.0;
  return v;
}

}  // namespace

double probe_metric(ProbeMetric metric, LabelKind kind, const Matrix& preds, const Matrix& labels) {
  switch (metric) {
    case ProbeMetric::spearman:
      return spearman_rho(column(preds, 0), column(labels, 0));
    case ProbeMetric::accuracy:
      if (kind == LabelKind::multiclass) return multiclass_accuracy(preds, column(labels, 0));
      if (kind == LabelKind::binary) return binary_accuracy(column(preds, 0), column(labels, 0));
      fail(ErrorCode::InvalidArgument, "accuracy needs a binary or multiclass task");
    case ProbeMetric::auc:
      if (kind != LabelKind::binary) fail(ErrorCode::InvalidArgument, "auc needs a binary task");
      return roc_auc(column(preds, 0), binary_column(labels, 0));
    case ProbeMetric::fmax:
      if (kind != LabelKind::multilabel) fail(ErrorCode::InvalidArgument, "fmax needs a multilabel task");
      return fmax(preds, labels).fmax;
    case ProbeMetric::aupr: {
      if (kind != LabelKind::multilabel) fail(ErrorCode::InvalidArgument, "aupr needs a multilabel task");
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& v : aupr_per_class(preds, labels)) {
        if (v) {
          sum += *v;
          ++n;
        }
      }
      return n ? sum / static_cast<double>(n) : 0.0;
    }
  }
  return 0.0;
}

ProbeRun train_probe(const ProbeData& data, const ProbeConfig& config, std::uint64_t seed) {
  if (config.batch == 0 || config.max_epochs == 0) fail(ErrorCode::InvalidArgument, "batch and epochs must be positive");
  MlpConfig mc;
  mc.in_dim = data.x_train.cols();
  mc.hidden = config.hidden;
  mc.out_dim = output_width(data);
  mc.activation = config.activation;
  mc.dropout = config.dropout;
  mc.batchnorm = config.batchnorm;
  mc.layernorm = config.layernorm;
  mc.residual = config.residual;
  Mlp mlp("probe", mc);
  ParamList params;
  mlp.collect(params);
  ProbeRun run;
  run.config = config;
  run.seed = seed;
  run.parameters = count_parameters(params);
  if (run.parameters > kProbeParamBudget) {
    fail(ErrorCode::ParamBudgetExceeded, std::to_string(run.parameters) + " trainable parameters > 1.5M");
  }

  Rng rng(seed);
  mlp.init(rng);
  AdamWState opt;
  opt.hyper.lr = config.lr;
  opt.hyper.weight_decay = config.weight_decay;

  auto evaluate = [&](const Matrix& x, const Matrix& y) {
    const Matrix p = predictions(data.kind, mlp.forward(x, Mode::eval, nullptr, nullptr));
    try {
      return probe_metric(data.metric, data.kind, p, y);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ConstantInput) return 0.0;  // degenerate predictor
      throw;
    }
  };
  auto snapshot = [&] {
    std::vector<std::vector<double>> s;
    for (const Param* p : params) s.push_back(p->value);
    return s;
  };

  const std::size_t n = data.x_train.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  double best = -std::numeric_limits<double>::infinity();
  auto best_weights = snapshot();
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += config.batch) {
      const std::size_t end = std::min(n, start + config.batch);
      Matrix xb(end - start, data.x_train.cols()), yb(end - start, data.y_train.cols());
      for (std::size_t r = start; r < end; ++r) {
        std::copy_n(data.x_train.row(order[r]).begin(), xb.cols(), xb.row(r - start).begin());
        std::copy_n(data.y_train.row(order[r]).begin(), yb.cols(), yb.row(r - start).begin());
      }
      Mlp::Cache cache;
      const Matrix z = mlp.forward(xb, Mode::train, &rng, &cache);
      zero_grads(params);
      mlp.backward(cache, loss_grad(data.kind, z, yb));
      adamw_step(params, opt);
    }
    run.epochs = epoch;
    const double v = evaluate(data.x_val, data.y_val);
    if (!std::isfinite(v)) fail(ErrorCode::NumericFailure, "non-finite validation metric", epoch);
    if (v > best) {
      best = v;
      best_weights = snapshot();
      run.best_epoch = epoch;
      since_best = 0;
      if (v >= 1.0) break;  // cannot be improved upon
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_weights[i];
  run.val_metric = best;
  run.test_metric = evaluate(data.x_test, data.y_test);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Param* p : params) {
    h = binio::fnv1a64({reinterpret_cast<const char*>(p->value.data()), p->value.size() * sizeof(double)}, h);
  }
  run.model_digest = h;
  return run;
}

std::vector<ProbeConfig> SweepGrid::points() const {
  std::vector<ProbeConfig> out;
  for (double l : lr)
    for (auto b : batch)
      for (const auto& h : hidden)
        for (double d : dropout)
          for (bool bn : batchnorm)
            for (bool ln : layernorm)
              for (auto act : activation)
                for (bool res : residual) {
                  ProbeConfig c;
                  c.lr = l;
                  c.batch = b;
                  c.max_epochs = max_epochs;
                  c.hidden = h;
                  c.dropout = d;
                  c.batchnorm = bn;
                  c.layernorm = ln;
                  c.activation = act;
                  c.residual = res;
                  out.push_back(c);
                }
  return out;
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string format_mean_std(double mean, double std) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f (%.3f)", mean, std);
  return buf;
}

SweepResult sweep(const ProbeData& data, const std::vector<ProbeConfig>& points, std::size_t n_runs,
                  std::uint64_t seed, unsigned threads) {
  if (points.empty() || n_runs == 0) fail(ErrorCode::InvalidArgument, "empty sweep");
  SweepResult res;
  res.points.resize(points.size());
  parallel_for(points.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      SweepPoint& pt = res.points[i];
      pt.config_id = i;
      pt.config = points[i];
      std::vector<double> val, test;
      for (std::size_t r = 0; r < n_runs; ++r) {
        pt.runs.push_back(train_probe(data, points[i], seed + r));
        val.push_back(pt.runs.back().val_metric);
        test.push_back(pt.runs.back().test_metric);
      }
      const double k = static_cast<double>(n_runs);
      pt.val_mean = std::accumulate(val.begin(), val.end(), 0.0) / k;
      pt.test_mean = std::accumulate(test.begin(), test.end(), 0.0) / k;
      pt.test_std = sample_std(test);
    }
  });
  for (std::size_t i = 1; i < res.points.size(); ++i) {
    if (res.points[i].val_mean > res.points[res.best].val_mean) res.best = i;
  }
  return res;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string sweep_csv(const std::string& task, ProbeMetric metric, const SweepResult& result) {
  const std::string m(to_string(metric));
  std::string out = "task,config_id,seed,metric,value\n";
  for (const auto& pt : result.points) {
    const std::string id = std::to_string(pt.config_id);
    for (const auto& r : pt.runs) {
      out += task + "," + id + "," + std::to_string(r.seed) + ",val_" + m + "," + num(r.val_metric) + "\n";
      out += task + "," + id + "," + std::to_string(r.seed) + ",test_" + m + "," + num(r.test_metric) + "\n";
    }
    out += task + "," + id + ",mean,test_" + m + "," + num(pt.test_mean) + "\n";
    out += task + "," + id + ",std,test_" + m + "," + num(pt.test_std) + "\n";
  }
  const auto& best = result.points[result.best];
  out += task + "," + std::to_string(best.config_id) + ",best,test_" + m + ",\"" +
         format_mean_std(best.test_mean, best.test_std) + "\"\n";
  return out;
}

nlohmann::json sweep_json(const std::string& task, ProbeMetric metric, const SweepResult& result) {
  const auto& best = result.points[result.best];
  nlohmann::json points = nlohmann::json::array();
  for (const auto& pt : result.points) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : pt.runs) {
      runs.push_back({{"seed", r.seed},
                      {"val", r.val_metric},
                      {"test", r.test_metric},
                      {"epochs", r.epochs},
                      {"best_epoch", r.best_epoch},
                      {"model_digest", binio::hex64(r.model_digest)}});
    }
    points.push_back({{"config_id", pt.config_id},
                      {"config", pt.config},
                      {"parameters", pt.runs.front().parameters},
                      {"val_mean", pt.val_mean},
                      {"test_mean", pt.test_mean},
                      {"test_std", pt.test_std},
                      {"runs", runs}});
  }
  return {{"task", task},
          {"metric", to_string(metric)},
          {"best", {{"config_id", best.config_id},
                    {"config", best.config},
                    {"val_mean", best.val_mean},
                    {"test", format_mean_std(best.test_mean, best.test_std)}}},
          {"points", points}};
}

}  // namespace onealign
