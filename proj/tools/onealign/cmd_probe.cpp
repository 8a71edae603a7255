// probe, sweep

#include <iostream>

#include "common.hpp"
#include "onealign/embstore.hpp"
#include "onealign/error.hpp"
#include "onealign/layers.hpp"
#include "onealign/probe.hpp"

namespace onealign::cli {
namespace {

// task.json: {"task", "kind", "metric"?, "embedding_file", "label_file",
// "split_file"}; paths relative to the task file.
struct LoadedTask {
  std::string name;
  ProbeData data;
  std::vector<std::filesystem::path> inputs;
};

LoadedTask load_task(const std::filesystem::path& task_path) {
  const auto j = read_json(task_path);
  const auto base = task_path.parent_path();
  auto resolve = [&](const char* key) {
    if (!j.contains(key)) fail(ErrorCode::InvalidArgument, std::string("task file lacks \"") + key + "\"");
    std::filesystem::path p = j.at(key).get<std::string>();
    return p.is_absolute() ? p : base / p;
  };
  LoadedTask t;
  t.name = j.value("task", task_path.stem().string());
  const auto [kind, k] = parse_label_kind(j.value("kind", std::string("binary")));
  const ProbeMetric metric = j.contains("metric") ? parse_probe_metric(j.at("metric").get<std::string>())
                                                  : default_metric(kind);
  t.inputs = {resolve("embedding_file"), resolve("label_file"), resolve("split_file")};
  const EmbeddingSet emb = load_pooled_embeddings(t.inputs[0]);
  const LabelTable labels = read_labels(t.inputs[1], t.name, kind, k);
  t.data = make_probe_data(emb, labels, read_split_file(t.inputs[2]), metric);
  return t;
}

struct ProbeArgs {
  std::string task;
  std::size_t runs = 1;
};

void probe(const Globals& g, const ProbeArgs& a, const RunClock& clock) {
  const LoadedTask t = load_task(a.task);
  const ProbeConfig config = config_json(g).get<ProbeConfig>();
  const std::uint64_t seed = g.seed.value_or(0);
  const SweepResult res = sweep(t.data, {config}, a.runs, seed, 1);
  const auto dir = out_dir(g);
  const nlohmann::json cfg = config;
  RunManifest m = clock.manifest(g, "probe", cfg, seed);
  m.add_input(a.task);
  for (const auto& p : t.inputs) m.add_input(p);
  write_report(dir / "probe_report.json", sweep_json(t.name, t.data.metric, res), m);
  write_text(dir / "probe.csv", sweep_csv(t.name, t.data.metric, res));
  const auto& pt = res.points.front();
  std::cout << t.name << " " << to_string(t.data.metric) << " " << format_mean_std(pt.test_mean, pt.test_std)
            << "\n";
}

struct SweepArgs {
  std::string task;
  std::size_t runs = 6;
  std::string grid;
};

template <class T>
void read_axis(const nlohmann::json& j, const char* key, std::vector<T>& axis) {
  if (j.contains(key)) axis = j.at(key).get<std::vector<T>>();
}

SweepGrid read_grid(const nlohmann::json& j) {
  SweepGrid grid;
  read_axis(j, "lr", grid.lr);
  read_axis(j, "batch", grid.batch);
  read_axis(j, "hidden", grid.hidden);
  read_axis(j, "dropout", grid.dropout);
  read_axis(j, "batchnorm", grid.batchnorm);
  read_axis(j, "layernorm", grid.layernorm);
  read_axis(j, "residual", grid.residual);
  grid.max_epochs = j.value("max_epochs", grid.max_epochs);
  if (j.contains("activation")) {
    grid.activation.clear();
    for (const auto& s : j.at("activation")) grid.activation.push_back(parse_activation(s.get<std::string>()));
  }
  return grid;
}

void run_sweep(const Globals& g, const SweepArgs& a, const RunClock& clock) {
  const LoadedTask t = load_task(a.task);
  const nlohmann::json grid_json = a.grid.empty() ? config_json(g) : read_json(a.grid);
  const SweepGrid grid = read_grid(grid_json);
  const std::uint64_t seed = g.seed.value_or(0);
  const auto points = grid.points();
  if (points.empty()) fail(ErrorCode::InvalidArgument, "empty sweep grid");
  const SweepResult res = sweep(t.data, points, a.runs, seed, threads(g));
  const auto dir = out_dir(g);
  RunManifest m = clock.manifest(g, "sweep", {{"grid", grid_json}, {"runs", a.runs}}, seed);
  m.add_input(a.task);
  for (const auto& p : t.inputs) m.add_input(p);
  if (!a.grid.empty()) m.add_input(a.grid);
  write_report(dir / "sweep.json", sweep_json(t.name, t.data.metric, res), m);
  write_text(dir / "sweep.csv", sweep_csv(t.name, t.data.metric, res));
  const auto& best = res.points[res.best];
  std::cout << t.name << " best " << best.config.describe() << " test "
            << format_mean_std(best.test_mean, best.test_std) << "\n";
}

}  // namespace

void register_probe(CLI::App& app, Globals& g) {
  auto pa = std::make_shared<ProbeArgs>();
  auto* pr = app.add_subcommand("probe", "Train an MLP probe on frozen embeddings");
  pr->add_option("--task", pa->task, "task.json")->required();
  pr->add_option("--runs", pa->runs, "seeded repetitions")->capture_default_str();
  pr->callback([&g, pa] { probe(g, *pa, RunClock{}); });

  auto sa = std::make_shared<SweepArgs>();
  auto* sw = app.add_subcommand("sweep", "Grid search over probe hyperparameters");
  sw->add_option("--task", sa->task, "task.json")->required();
  sw->add_option("--runs", sa->runs, "seeded runs per grid point")->capture_default_str();
  sw->add_option("--grid", sa->grid, "grid JSON (axes default to the full grid); --config also works");
  sw->callback([&g, sa] { run_sweep(g, *sa, RunClock{}); });
}

}  // namespace onealign::cli
