// synth, ingest

#include <cmath>
#include <iostream>
#include <set>

#include "common.hpp"
#include "onealign/binio.hpp"
#include "onealign/embstore.hpp"
#include "onealign/error.hpp"
#include "onealign/rng.hpp"
#include "onealign/synth.hpp"
#include "onealign/tensor.hpp"

namespace onealign::cli {
namespace {

struct SynthArgs {
  std::string kind = "workload";
  std::string preset = "small";
  // probe tasks
  std::string task = "separable";
  std::size_t n = 600;
  std::size_t dim = 16;
};

nlohmann::json modality_sizes(const std::vector<ModalityStore>& mods) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& m : mods) j[m.name()] = m.size();
  return j;
}

void synth_workload(const Globals& g, const SynthArgs& a, const RunClock& clock) {
  auto json = config_json(g);
  SynthConfig cfg = json.empty() ? synth_preset(a.preset) : json.get<SynthConfig>();
  if (g.seed) cfg.seed = *g.seed;
  const auto dir = out_dir(g);
  const SynthData data = generate(cfg);
  const auto ws = write_synth(dir, data);
  const nlohmann::json resolved = cfg;
  write_text(dir / "synth_config.json", resolved.dump(2) + "\n");
  std::set<std::string> labels;
  for (const auto& [id, c] : data.clusters) labels.insert(c);
  write_report(dir / "synth_report.json",
               {{"workspace", ws.filename().string()},
                {"items", cfg.n_items},
                {"sizes", modality_sizes(data.modalities)},
                {"pairs", data.manifest.size()},
                {"clusters", labels.size()}},
               clock.manifest(g, "synth", resolved, cfg.seed));
  std::cout << ws.string() << "\n";
}

void synth_msa(const Globals& g, const RunClock& clock) {
  auto json = config_json(g);
  MsaFamilyConfig c;
  c.families = json.value("families", c.families);
  c.members = json.value("members", c.members);
  c.length = json.value("length", c.length);
  c.embed_dim = json.value("embed_dim", c.embed_dim);
  c.max_step = json.value("max_step", c.max_step);
  c.drift = json.value("drift", c.drift);
  c.seed = g.seed.value_or(json.value("seed", c.seed));
  const auto dir = out_dir(g);
  write_msa_families(dir, generate_msa_families(c));
  const nlohmann::json resolved{{"families", c.families}, {"members", c.members}, {"length", c.length},
                                {"embed_dim", c.embed_dim}, {"max_step", c.max_step}, {"drift", c.drift},
                                {"seed", c.seed}};
  write_report(dir / "synth_report.json", {{"kind", "msa"}, {"config", resolved}},
               clock.manifest(g, "synth", resolved, c.seed));
}

// Two Gaussian blobs (separable) or the same balanced labels randomly
// permuted against unshifted embeddings (null), split 60/20/20.
void synth_probe(const Globals& g, const SynthArgs& a, const RunClock& clock) {
  if (a.task != "separable" && a.task != "null") fail(ErrorCode::InvalidArgument, "--task is separable or null");
  const std::uint64_t seed = g.seed.value_or(0);
  Rng rng(seed);
  std::vector<double> dir(a.dim);
  for (auto& v : dir) v = rng.normal();
  const double norm = std::sqrt(dot(dir, dir));
  std::vector<std::string> ids;
  std::vector<float> data;
  std::vector<int> null_labels(a.n);
  for (std::size_t i = 0; i < a.n; ++i) null_labels[i] = static_cast<int>(i % 2);
  rng.shuffle(null_labels);
  std::string labels, splits;
  for (std::size_t i = 0; i < a.n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "S%06zu", i);
    ids.push_back(id);
    const int y = static_cast<int>(i % 2);
    const double shift = a.task == "separable" ? (y ? 3.0 : -3.0) : 0.0;
    for (std::size_t k = 0; k < a.dim; ++k) data.push_back(static_cast<float>(rng.normal() + shift * dir[k] / norm));
    const int label = a.task == "separable" ? y : null_labels[i];
    labels += std::string(id) + "\t" + std::to_string(label) + "\n";
    const std::size_t r = i % 10;
    splits += std::string(id) + "\t" + (r < 6 ? "train" : r < 8 ? "val" : "test") + "\n";
  }
  const auto out = out_dir(g);
  save_pooled_embeddings(out / "embeddings.emb1", EmbeddingSet({"seq", true}, ids, a.dim, data));
  write_text(out / "labels.tsv", labels);
  write_text(out / "splits.tsv", splits);
  const nlohmann::json task{{"task", a.task},
                            {"kind", "binary"},
                            {"metric", "accuracy"},
                            {"embedding_file", "embeddings.emb1"},
                            {"label_file", "labels.tsv"},
                            {"split_file", "splits.tsv"}};
  write_text(out / "task.json", task.dump(2) + "\n");
  write_report(out / "synth_report.json", {{"kind", "probe"}, {"task", a.task}, {"n", a.n}, {"dim", a.dim}},
               clock.manifest(g, "synth", task, seed));
}

// Binding-site style pairs: similar pairs share a latent plus noise,
// dissimilar pairs are independent.
void synth_prospeccts(const Globals& g, const SynthArgs& a, const RunClock& clock) {
  const std::uint64_t seed = g.seed.value_or(0);
  Rng rng(seed);
  std::vector<std::string> ids;
  std::vector<float> data;
  std::string pairs;
  for (std::size_t i = 0; i < a.n; ++i) {
    std::vector<double> base(a.dim);
    for (auto& v : base) v = rng.normal();
    const bool similar = i % 2 == 0;
    for (int side = 0; side < 2; ++side) {
      char id[32];
      std::snprintf(id, sizeof id, "site%05zu%c", i, side ? 'b' : 'a');
      ids.push_back(id);
      for (std::size_t k = 0; k < a.dim; ++k) {
        const double v = similar || side == 0 ? base[k] + 0.5 * rng.normal() : rng.normal();
        data.push_back(static_cast<float>(v));
      }
    }
    pairs += ids[ids.size() - 2] + "\t" + ids.back() + "\t" + (similar ? "1" : "0") + "\n";
  }
  const auto out = out_dir(g);
  save_pooled_embeddings(out / "sites.emb1", EmbeddingSet({"pocket", false}, ids, a.dim, data));
  write_text(out / "pairs.tsv", pairs);
  write_report(out / "synth_report.json", {{"kind", "prospeccts"}, {"pairs", a.n}, {"dim", a.dim}},
               clock.manifest(g, "synth", {{"n", a.n}, {"dim", a.dim}}, seed));
}

struct IngestArgs {
  std::string workspace;
  std::vector<double> fractions{0.8, 0.1, 0.1};
};

void ingest(const Globals& g, const IngestArgs& a, const RunClock& clock) {
  if (a.fractions.size() != 3) fail(ErrorCode::BadFractions, "--fractions needs three values");
  const Workspace ws = load_workspace(a.workspace);
  DropReport drops;
  PairedDataset ds = build_paired_dataset(ws.manifest_path, ws, g.allow_missing, &drops);
  const std::uint64_t seed = g.seed.value_or(0);
  ds = split_by_cluster(ds, read_cluster_map(ws.cluster_path),
                        {a.fractions[0], a.fractions[1], a.fractions[2]}, seed);
  const auto dir = out_dir(g);
  write_split_pairs(dir / "pairs.tsv", ds);

  nlohmann::json counts = nlohmann::json::object();
  for (const auto& m : ds.modalities) {
    for (Split s : {Split::train, Split::val, Split::test}) counts[m][std::string(to_string(s))] = ds.select(m, s).size();
  }
  nlohmann::json dropped = nlohmann::json::array();
  for (std::size_t i = 0; i < drops.dropped.size(); ++i) {
    const auto& r = drops.dropped[i];
    dropped.push_back({{"anchor_id", r.anchor_id}, {"other_id", r.other_id}, {"modality", r.modality},
                       {"reason", drops.reasons[i]}});
  }
  const nlohmann::json config{{"workspace", a.workspace}, {"fractions", a.fractions},
                              {"allow_missing", g.allow_missing}};
  RunManifest m = clock.manifest(g, "ingest", config, seed);
  m.add_input(a.workspace);
  m.add_input(ws.manifest_path);
  m.add_input(ws.cluster_path);
  write_report(dir / "ingest_report.json",
               {{"anchor", ds.anchor}, {"sizes", modality_sizes(ws.modalities)}, {"pairs", ds.pairs.size()},
                {"split_counts", counts}, {"dropped", dropped}},
               m);
  std::cerr << ds.pairs.size() << " pairs, " << drops.dropped.size() << " dropped\n";
}

}  // namespace

void register_data(CLI::App& app, Globals& g) {
  auto sa = std::make_shared<SynthArgs>();
  auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic dataset");
  synth->add_option("--kind", sa->kind, "workload | msa | probe | prospeccts")->capture_default_str();
  synth->add_option("--preset", sa->preset, "workload preset: small | emergence | baseline")->capture_default_str();
  synth->add_option("--task", sa->task, "probe task: separable | null")->capture_default_str();
  synth->add_option("--n", sa->n, "items for probe/prospeccts kinds")->capture_default_str();
  synth->add_option("--dim", sa->dim, "embedding width for probe/prospeccts kinds")->capture_default_str();
  synth->callback([&g, sa] {
    RunClock clock;
    if (sa->kind == "workload") synth_workload(g, *sa, clock);
    else if (sa->kind == "msa") synth_msa(g, clock);
    else if (sa->kind == "probe") synth_probe(g, *sa, clock);
    else if (sa->kind == "prospeccts") synth_prospeccts(g, *sa, clock);
    else fail(ErrorCode::InvalidArgument, "unknown --kind " + sa->kind);
  });

  auto ia = std::make_shared<IngestArgs>();
  auto* ing = app.add_subcommand("ingest", "Validate a workspace and write cluster-aware splits");
  ing->add_option("--workspace", ia->workspace, "workspace.json")->required();
  ing->add_option("--fractions", ia->fractions, "train val test fractions")->expected(3)->capture_default_str();
  ing->callback([&g, ia] { ingest(g, *ia, RunClock{}); });
}

}  // namespace onealign::cli
