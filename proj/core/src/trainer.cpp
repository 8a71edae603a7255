#include "onealign/trainer.hpp"

#include <cmath>
#include <cstdio>

#include "onealign/contrastive.hpp"
#include "onealign/error.hpp"
#include "onealign/layers.hpp"
#include "onealign/schedule.hpp"

namespace onealign {

void to_json(nlohmann::json& j, const AlignConfig& c) {
  j = nlohmann::json{{"temperature", c.temperature},
                     {"learnable_tau", c.learnable_tau},
                     {"batch_size", c.batch_size},
                     {"steps", c.steps},
                     {"shared_dim", c.shared_dim},
                     {"lr", c.adam.lr},
                     {"beta1", c.adam.beta1},
                     {"beta2", c.adam.beta2},
                     {"eps", c.adam.eps},
                     {"weight_decay", c.adam.weight_decay},
                     {"seed", c.seed},
                     {"workspace", c.workspace},
                     {"fractions", {c.fractions.train, c.fractions.val, c.fractions.test}},
                     {"split_seed", c.split_seed},
                     {"heads", c.heads}};
}

void from_json(const nlohmann::json& j, AlignConfig& c) {
  c.temperature = j.value("temperature", c.temperature);
  c.learnable_tau = j.value("learnable_tau", c.learnable_tau);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.steps = j.value("steps", c.steps);
  c.shared_dim = j.value("shared_dim", c.shared_dim);
  c.adam.lr = j.value("lr", c.adam.lr);
  c.adam.beta1 = j.value("beta1", c.adam.beta1);
  c.adam.beta2 = j.value("beta2", c.adam.beta2);
  c.adam.eps = j.value("eps", c.adam.eps);
  c.adam.weight_decay = j.value("weight_decay", c.adam.weight_decay);
  c.seed = j.value("seed", c.seed);
  c.workspace = j.value("workspace", c.workspace);
  if (j.contains("fractions")) {
    auto f = j["fractions"].get<std::vector<double>>();
    if (f.size() != 3) fail(ErrorCode::BadFractions, "fractions needs three values");
    c.fractions = {f[0], f[1], f[2]};
  }
  c.split_seed = j.value("split_seed", c.split_seed);
  if (j.contains("heads")) c.heads = j["heads"].get<std::vector<HeadSpec>>();
  if (!(c.temperature > 0.0)) fail(ErrorCode::InvalidArgument, "temperature must be > 0");
  if (c.shared_dim == 0) fail(ErrorCode::InvalidArgument, "shared_dim must be > 0");
  if (c.batch_size == 0) fail(ErrorCode::InvalidArgument, "batch_size must be > 0");
}

void complete_head_specs(AlignConfig& config, const Workspace& ws) {
  std::vector<HeadSpec> specs;
  for (const auto& m : ws.modalities) {
    auto it = std::find_if(config.heads.begin(), config.heads.end(),
                           [&](const HeadSpec& s) { return s.modality == m.name(); });
    HeadSpec s = it != config.heads.end() ? *it : default_head_spec(m.name(), m.is_tokens(), m.width());
    if (s.input_dim == 0) s.input_dim = m.width();
    if (s.input_dim != m.width()) {
      fail(ErrorCode::ShapeMismatch, m.name() + ": head input_dim " + std::to_string(s.input_dim) +
                                         " != data width " + std::to_string(m.width()));
    }
    if ((s.pooler != PoolerKind::none) != m.is_tokens()) {
      fail(ErrorCode::ShapeMismatch, m.name() + ": pooler '" + std::string(to_string(s.pooler)) +
                                         "' does not fit the data layout");
    }
    specs.push_back(std::move(s));
  }
  for (const auto& s : config.heads) {
    if (!ws.index_of(s.modality)) fail(ErrorCode::UnknownModality, s.modality);
  }
  config.heads = std::move(specs);
}

TrainPairs collect_train_pairs(const PairedDataset& ds, const Workspace& ws) {
  TrainPairs out;
  for (const auto& name : ds.modalities) {
    out.modality.push_back(*ws.index_of(name));
    auto& rows = out.rows.emplace_back();
    for (const Pair* p : ds.select(name, Split::train)) rows.emplace_back(p->anchor_row, p->other_row);
  }
  return out;
}

TrainState init_train_state(const AlignConfig& config) {
  TrainState s;
  s.rng = Rng(config.seed);
  for (const auto& spec : config.heads) {
    auto& head = s.heads.emplace_back(spec, config.shared_dim);
    head.init(s.rng);
    for (Param* p : head.params()) round_to_f32(p->value);
    AdamWState opt;
    opt.hyper = config.adam;
    opt.f32_storage = true;
    s.opt.push_back(std::move(opt));
    s.updates.push_back(0);
  }
  s.log_tau = static_cast<float>(std::log(config.temperature));
  s.tau_opt.hyper = config.adam;
  s.tau_opt.f32_storage = true;
  return s;
}

HeadInput gather_rows(const ModalityStore& store, std::span<const std::size_t> rows) {
  HeadInput in;
  if (!store.is_tokens()) {
    const auto& set = store.pooled();
    in.pooled = Matrix(rows.size(), set.dim());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      auto src = set.row(rows[r]);
      std::copy(src.begin(), src.end(), in.pooled.row(r).begin());
    }
    return in;
  }
  const auto& set = store.tokens();
  in.tokens.reserve(rows.size());
  in.masks.reserve(rows.size());
  for (std::size_t row : rows) {
    const std::size_t len = set.length(row);
    Matrix x(len, set.channels());
    auto src = set.tokens(row);
    std::copy(src.begin(), src.end(), x.data().begin());
    in.tokens.push_back(std::move(x));
    auto m = set.mask(row);
    in.masks.emplace_back(m.begin(), m.end());
  }
  return in;
}

namespace {

void round_head(ProjectionHead& head) {
  for (Param* p : head.params()) round_to_f32(p->value);
}

void next_epoch(const AlignConfig& config, TrainState& state, const TrainPairs& pairs) {
  std::vector<std::size_t> sizes;
  for (const auto& r : pairs.rows) sizes.push_back(r.size());
  state.epoch_lists = make_epoch_schedule(sizes, config.batch_size, state.rng);
  state.cursor = 0;
  ++state.epoch;
}

}  // namespace

std::vector<LossRecord> train_step(const AlignConfig& config, TrainState& state,
                                   const Workspace& ws, const TrainPairs& pairs) {
  const std::size_t n = config.batch_size;
  if (state.epoch_lists.empty() || state.cursor + n > state.epoch_lists.front().size()) {
    next_epoch(config, state, pairs);
  }
  const std::size_t anchor = ws.anchor_index();
  std::vector<LossRecord> out;
  for (std::size_t k = 0; k < pairs.rows.size(); ++k) {
    const std::size_t mod = pairs.modality[k];
    std::vector<std::size_t> arows(n), orows(n);
    for (std::size_t b = 0; b < n; ++b) {
      const auto& pr = pairs.rows[k][state.epoch_lists[k][state.cursor + b]];
      arows[b] = pr.first;
      orows[b] = pr.second;
    }
    const HeadInput ain = gather_rows(ws.modalities[anchor], arows);
    const HeadInput oin = gather_rows(ws.modalities[mod], orows);

    ProjectionHead& ha = state.heads[anchor];
    ProjectionHead& ho = state.heads[mod];
    ProjectionHead::Cache ca, co;
    const Matrix pa = ha.forward(ain, Mode::train, &state.rng, &ca);
    const Matrix po = ho.forward(oin, Mode::train, &state.rng, &co);
    const double tau = std::exp(state.log_tau);
    const LossGrad g = info_nce_grad(pa, po, tau);
    if (!std::isfinite(g.loss)) {
      fail(ErrorCode::NumericFailure, "non-finite loss for " + ws.modalities[mod].name(), state.step);
    }

    ParamList pa_params = ha.params(), po_params = ho.params();
    zero_grads(pa_params);
    zero_grads(po_params);
    ha.backward(ain, ca, g.da);
    ho.backward(oin, co, g.db);
    adamw_step(pa_params, state.opt[anchor]);
    adamw_step(po_params, state.opt[mod]);
    round_head(ha);
    round_head(ho);
    ++state.updates[anchor];
    ++state.updates[mod];
    if (config.learnable_tau) {
      std::vector<double> w{state.log_tau};
      const std::vector<double> dg{g.dlog_tau};
      adamw_step(w, dg, state.tau_opt, false);
      state.log_tau = w[0];
    }
    out.push_back({state.step, ws.modalities[mod].name(), g.loss});
  }
  state.cursor += n;
  ++state.step;
  return out;
}

std::vector<LossRecord> train(const AlignConfig& config, TrainState& state, const Workspace& ws,
                              const TrainPairs& pairs, const StepCallback& on_step) {
  std::vector<LossRecord> log;
  while (state.step < config.steps) {
    auto recs = train_step(config, state, ws, pairs);
    if (on_step) on_step(state, recs);
    log.insert(log.end(), recs.begin(), recs.end());
  }
  return log;
}

std::string loss_csv(const std::vector<LossRecord>& log) {
  std::string out = "step,modality,loss\n";
  char buf[64];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof buf, "%.17g", r.loss);
    out += std::to_string(r.step) + "," + r.modality + "," + buf + "\n";
  }
  return out;
}

Matrix embed_rows(ProjectionHead& head, const ModalityStore& store, std::span<const std::size_t> rows,
                  std::size_t batch) {
  Matrix out(rows.size(), head.shared_dim());
  for (std::size_t start = 0; start < rows.size(); start += batch) {
    const std::size_t end = std::min(rows.size(), start + batch);
    const HeadInput in = gather_rows(store, rows.subspan(start, end - start));
    const Matrix proj = normalize_rows(head.forward(in, Mode::eval, nullptr, nullptr), kNormEps);
    for (std::size_t r = start; r < end; ++r) {
      auto src = proj.row(r - start);
      std::copy(src.begin(), src.end(), out.row(r).begin());
    }
  }
  return out;
}

}  // namespace onealign
