// align-train, eval-retrieval

#include <iostream>

#include "common.hpp"
#include "onealign/binio.hpp"
#include "onealign/checkpoint.hpp"
#include "onealign/error.hpp"
#include "onealign/retrieval.hpp"
#include "onealign/trainer.hpp"

namespace onealign::cli {
namespace {

struct TrainArgs {
  std::string workspace;
  std::optional<std::size_t> steps;
  std::string resume;
  std::size_t save_every = 0;
};

PairedDataset split_dataset(const Workspace& ws, const AlignConfig& c, bool allow_missing) {
  PairedDataset ds = build_paired_dataset(ws.manifest_path, ws, allow_missing);
  return split_by_cluster(std::move(ds), read_cluster_map(ws.cluster_path), c.fractions, c.split_seed);
}

void align_train(const Globals& g, const TrainArgs& a, const RunClock& clock) {
  AlignConfig config;
  Checkpoint resumed;
  const bool resuming = !a.resume.empty();
  if (resuming) {
    resumed = load_checkpoint(a.resume);
    config = resumed.config;
  } else {
    const auto json = config_json(g);
    config = json.get<AlignConfig>();
    if (g.seed) config.seed = *g.seed;
    if (!json.contains("split_seed")) config.split_seed = config.seed;
  }
  if (!a.workspace.empty()) config.workspace = a.workspace;
  if (a.steps) config.steps = *a.steps;
  if (config.workspace.empty()) fail(ErrorCode::InvalidArgument, "no workspace given (--workspace or config)");

  const Workspace ws = load_workspace(config.workspace);
  if (!resuming) complete_head_specs(config, ws);
  const PairedDataset ds = split_dataset(ws, config, g.allow_missing);
  const TrainPairs pairs = collect_train_pairs(ds, ws);
  TrainState state = resuming ? std::move(resumed.state) : init_train_state(config);
  if (state.heads.size() != ws.modalities.size()) fail(ErrorCode::BadCheckpoint, "checkpoint does not match workspace");

  const auto dir = out_dir(g);
  std::map<std::string, double> first, last;
  auto log = train(config, state, ws, pairs, [&](const TrainState& s, const std::vector<LossRecord>& recs) {
    for (const auto& r : recs) {
      first.emplace(r.modality, r.loss);
      last[r.modality] = r.loss;
    }
    if (a.save_every && s.step % a.save_every == 0 && s.step < config.steps) {
      save_checkpoint(dir / ("checkpoint_step" + std::to_string(s.step) + ".opc1"), config, s);
    }
  });
  const auto ck_path = dir / "checkpoint.opc1";
  save_checkpoint(ck_path, config, state);
  write_text(dir / "loss.csv", loss_csv(log));

  nlohmann::json updates = nlohmann::json::object();
  for (std::size_t i = 0; i < ws.modalities.size(); ++i) updates[ws.modalities[i].name()] = state.updates[i];
  const nlohmann::json cfg_json = config;
  RunManifest m = clock.manifest(g, "align-train", cfg_json, config.seed);
  m.add_input(config.workspace);
  m.add_input(ws.manifest_path);
  m.add_input(ws.cluster_path);
  if (resuming) m.add_input(a.resume);
  write_report(dir / "train_report.json",
               {{"config", cfg_json},
                {"steps", state.step},
                {"epochs", state.epoch},
                {"first_loss", first},
                {"last_loss", last},
                {"updates", updates},
                {"temperature", std::exp(state.log_tau)},
                {"checkpoint", {{"path", "checkpoint.opc1"}, {"fnv1a64", digest_file(ck_path)}}}},
               m);
  std::cout << ck_path.string() << "\n";
}

struct EvalArgs {
  std::string checkpoint;
  std::string test;
  std::string workspace;
  std::size_t n = 4000;
};

void eval_retrieval(const Globals& g, const EvalArgs& a, const RunClock& clock) {
  Checkpoint ck = load_checkpoint(a.checkpoint);
  const std::string ws_path = a.workspace.empty() ? ck.config.workspace : a.workspace;
  const Workspace ws = load_workspace(ws_path);
  const PairedDataset full = split_dataset(ws, ck.config, g.allow_missing);

  PairedDataset test;
  if (a.test.empty()) {
    test = full;
    std::erase_if(test.pairs, [](const Pair& p) { return p.split != Split::test; });
  } else {
    std::vector<ManifestRow> rows;
    for (const auto& r : read_split_pairs(a.test)) {
      if (!r.split || *r.split == Split::test) rows.push_back(r.row);
    }
    test = build_paired_dataset(rows, ws, g.allow_missing);
    test.cluster_of = full.cluster_of;
  }
  const auto train_clusters = train_clusters_of(full);
  const AlignmentReport report = evaluate_alignment(ck, ws, test, {a.n, threads(g)}, &train_clusters);

  const auto dir = out_dir(g);
  const nlohmann::json cfg{{"checkpoint", a.checkpoint}, {"test", a.test}, {"workspace", ws_path}, {"n", a.n}};
  RunManifest m = clock.manifest(g, "eval-retrieval", cfg, ck.config.seed);
  m.add_input(a.checkpoint);
  if (!a.test.empty()) m.add_input(a.test);
  m.add_input(ws_path);
  write_report(dir / "retrieval.json", report_json(report), m);
  write_text(dir / "retrieval.csv", report_csv(report));
  for (const auto& t : report.tasks) {
    std::cerr << t.task.key() << " (" << to_string(t.task.kind) << ") n=" << t.metrics.n << " MR=" << t.metrics.mr
              << "\n";
  }
}

}  // namespace

void register_align(CLI::App& app, Globals& g) {
  auto ta = std::make_shared<TrainArgs>();
  auto* tr = app.add_subcommand("align-train", "Train pooling + projection heads with symmetric InfoNCE");
  tr->add_option("--workspace", ta->workspace, "workspace.json (overrides the config)");
  tr->add_option("--steps", ta->steps, "optimizer steps (overrides the config)");
  tr->add_option("--resume", ta->resume, "continue from an OPC1 checkpoint");
  tr->add_option("--save-every", ta->save_every, "also write a checkpoint every N steps");
  tr->callback([&g, ta] { align_train(g, *ta, RunClock{}); });

  auto ea = std::make_shared<EvalArgs>();
  auto* ev = app.add_subcommand("eval-retrieval", "Score trained and emergent cross-modal retrieval");
  ev->add_option("--checkpoint", ea->checkpoint, "OPC1 checkpoint")->required();
  ev->add_option("--test", ea->test, "pair TSV; rows with a split column other than test are ignored");
  ev->add_option("--workspace", ea->workspace, "override the checkpoint's workspace path");
  ev->add_option("--n", ea->n, "gallery size limit per task")->capture_default_str();
  ev->callback([&g, ea] { eval_retrieval(g, *ea, RunClock{}); });
}

}  // namespace onealign::cli
