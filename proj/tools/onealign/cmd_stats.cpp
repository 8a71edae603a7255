// stats, evo, prospeccts

#include <algorithm>
#include <charconv>
#include <iostream>
#include <set>

#include "common.hpp"
#include "onealign/binio.hpp"
#include "onealign/embstore.hpp"
#include "onealign/error.hpp"
#include "onealign/evo.hpp"
#include "onealign/msa.hpp"
#include "onealign/stats.hpp"

namespace onealign::cli {
namespace {

double parse_number(std::string_view s) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size()) fail(ErrorCode::ParseError, "not a number: " + std::string(s));
  return v;
}

// One value per line (first column).
std::vector<double> read_values(const std::string& path) {
  std::vector<double> v;
  const std::string text = binio::read_file(path);
  for (auto line : data_lines(text)) v.push_back(parse_number(split_tsv(line).front()));
  return v;
}

nlohmann::json result_json(const WilcoxonResult& r) {
  return {{"statistic", r.statistic},
          {"p_value", r.p_value},
          {"alternative", to_string(r.alternative)},
          {"method", to_string(r.method)}};
}

TestMethod parse_method(const std::string& s) {
  if (s == "auto") return TestMethod::automatic;
  if (s == "exact") return TestMethod::exact;
  if (s == "normal") return TestMethod::normal_approx;
  fail(ErrorCode::InvalidArgument, "method is auto, exact or normal");
}

struct StatsArgs {
  std::string x, y, values, perf;
  std::string alternative = "two-sided";
  std::string method = "auto";
};

void two_sample(const Globals& g, const StatsArgs& a, bool paired, const RunClock& clock) {
  const auto x = read_values(a.x);
  const auto y = read_values(a.y);
  const Alternative alt = parse_alternative(a.alternative);
  const TestMethod method = parse_method(a.method);
  const auto r = paired ? wilcoxon_signed_rank(x, y, alt, method) : wilcoxon_rank_sum(x, y, alt, method);
  const std::string test = paired ? "signed-rank" : "rank-sum";
  const nlohmann::json cfg{{"test", test}, {"alternative", a.alternative}, {"method", a.method}};
  RunManifest m = clock.manifest(g, "stats", cfg, g.seed.value_or(0));
  m.add_input(a.x);
  m.add_input(a.y);
  auto report = result_json(r);
  report["test"] = test;
  report["n_x"] = x.size();
  report["n_y"] = y.size();
  write_report(out_dir(g) / "stats.json", report, m);
  std::printf("%s statistic=%.6g p=%.6g (%s)\n", test.c_str(), r.statistic, r.p_value,
              std::string(to_string(r.method)).c_str());
}

void iqr(const Globals& g, const StatsArgs& a, const RunClock& clock) {
  const auto s = iqr_summary(read_values(a.values));
  RunManifest m = clock.manifest(g, "stats", {{"test", "iqr"}}, g.seed.value_or(0));
  m.add_input(a.values);
  write_report(out_dir(g) / "stats.json",
               {{"min", s.min}, {"q1", s.q1}, {"median", s.median}, {"q3", s.q3}, {"max", s.max}, {"iqr", s.iqr},
                {"outliers", s.outlier_count}},
               m);
  std::printf("median=%.6g iqr=%.6g outliers=%zu\n", s.median, s.iqr, s.outlier_count);
}

// TSV `model<TAB>performance`.
void drop(const Globals& g, const StatsArgs& a, const RunClock& clock) {
  std::vector<std::pair<std::string, double>> perf;
  const std::string text = binio::read_file(a.perf);
  for (auto line : data_lines(text)) {
    auto f = split_tsv(line);
    if (f.size() < 2) fail(ErrorCode::ParseError, "perf row needs model and value");
    perf.emplace_back(std::string(f[0]), parse_number(f[1]));
  }
  const DropMatrix d = performance_drop_matrix(perf);
  nlohmann::json rows = nlohmann::json::array();
  std::string csv = "model";
  for (const auto& name : d.models) csv += "," + name;
  csv += "\n";
  for (std::size_t i = 0; i < d.models.size(); ++i) {
    std::vector<double> row(d.delta.row(i).begin(), d.delta.row(i).end());
    rows.push_back(row);
    csv += d.models[i];
    for (double v : row) {
      char buf[32];
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      csv += buf;
    }
    csv += "\n";
  }
  RunManifest m = clock.manifest(g, "stats", {{"test", "drop"}}, g.seed.value_or(0));
  m.add_input(a.perf);
  const auto dir = out_dir(g);
  write_report(dir / "stats.json", {{"models", d.models}, {"delta", rows}}, m);
  write_text(dir / "drop.csv", csv);
}

struct EvoArgs {
  std::vector<std::string> msa;
  std::string embeddings;
  EvoOptions options;
};

void evo(const Globals& g, EvoArgs a, const RunClock& clock) {
  std::vector<std::filesystem::path> files;
  for (const auto& p : a.msa) {
    if (std::filesystem::is_directory(p)) {
      std::vector<std::filesystem::path> found;
      for (const auto& e : std::filesystem::directory_iterator(p)) {
        const auto ext = e.path().extension();
        if (ext == ".a3m" || ext == ".fasta" || ext == ".fa") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.emplace_back(p);
    }
  }
  if (files.empty()) fail(ErrorCode::InvalidArgument, "no MSA files");
  std::vector<std::vector<MsaRecord>> msas;
  std::vector<MsaRecord> pool;
  std::set<std::string> seen;
  for (const auto& f : files) {
    msas.push_back(read_msa(f));
    for (const auto& r : msas.back()) {
      if (seen.insert(r.name).second) pool.push_back(r);
    }
  }
  const EmbeddingSet emb = load_pooled_embeddings(a.embeddings);
  a.options.seed = g.seed.value_or(0);
  const EvoReport report = evo_relatedness_report(lookup_embedder(emb), msas, pool, a.options);

  const nlohmann::json cfg{{"k_sim", a.options.k_sim}, {"k_div", a.options.k_div},
                           {"n_unrelated", a.options.n_unrelated}};
  RunManifest m = clock.manifest(g, "evo", cfg, a.options.seed);
  for (const auto& f : files) m.add_input(f);
  m.add_input(a.embeddings);
  const auto dir = out_dir(g);
  write_report(dir / "evo.json", evo_json(report), m);
  write_text(dir / "evo.csv", evo_csv(report));
  std::printf("median similarity: similar %.4f, divergent %.4f, unrelated %.4f\n", report.median_similar,
              report.median_divergent, report.median_unrelated);
}

struct ProspecctsArgs {
  std::string pairs;
  std::string embeddings;
};

void prospeccts(const Globals& g, const ProspecctsArgs& a, const RunClock& clock) {
  const PairAuc res = roc_auc_pairs(read_pair_list(a.pairs), load_pooled_embeddings(a.embeddings));
  std::size_t positives = 0;
  for (auto l : res.labels) positives += l;
  RunManifest m = clock.manifest(g, "prospeccts", nlohmann::json::object(), g.seed.value_or(0));
  m.add_input(a.pairs);
  m.add_input(a.embeddings);
  std::string csv = "threshold,fpr,tpr\n";
  for (const auto& p : res.roc) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.threshold, p.fpr, p.tpr);
    csv += buf;
  }
  const auto dir = out_dir(g);
  write_report(dir / "prospeccts.json",
               {{"auc", res.auc}, {"pairs", res.labels.size()}, {"positives", positives}}, m);
  write_text(dir / "roc.csv", csv);
  std::printf("AUC %.4f over %zu pairs\n", res.auc, res.labels.size());
}

}  // namespace

void register_stats(CLI::App& app, Globals& g) {
  auto sa = std::make_shared<StatsArgs>();
  auto* st = app.add_subcommand("stats", "Rank tests and summaries over value files");
  st->require_subcommand(1);
  auto add_test_opts = [sa](CLI::App* c) {
    c->add_option("--x", sa->x, "first sample, one value per line")->required();
    c->add_option("--y", sa->y, "second sample")->required();
    c->add_option("--alternative", sa->alternative, "greater | less | two-sided")->capture_default_str();
    c->add_option("--method", sa->method, "auto | exact | normal")->capture_default_str();
  };
  auto* rs = st->add_subcommand("wilcoxon", "Wilcoxon rank-sum (Mann-Whitney) test");
  add_test_opts(rs);
  rs->callback([&g, sa] { two_sample(g, *sa, false, RunClock{}); });
  auto* sr = st->add_subcommand("signed-rank", "Wilcoxon signed-rank test on paired samples");
  add_test_opts(sr);
  sr->callback([&g, sa] { two_sample(g, *sa, true, RunClock{}); });
  auto* iq = st->add_subcommand("iqr", "Median, quartiles and low outliers");
  iq->add_option("--values", sa->values, "one value per line")->required();
  iq->callback([&g, sa] { iqr(g, *sa, RunClock{}); });
  auto* dr = st->add_subcommand("drop", "Pairwise relative performance drops");
  dr->add_option("--perf", sa->perf, "TSV model<TAB>performance")->required();
  dr->callback([&g, sa] { drop(g, *sa, RunClock{}); });
  for (auto* c : {rs, sr, iq, dr}) c->fallthrough();

  auto ea = std::make_shared<EvoArgs>();
  auto* ev = app.add_subcommand("evo", "Embedding similarity against evolutionary relatedness");
  ev->add_option("--msa", ea->msa, "MSA files (a3m/FASTA) or directories")->required();
  ev->add_option("--embeddings", ea->embeddings, "EMB1 keyed by sequence name")->required();
  ev->add_option("--k-sim", ea->options.k_sim, "most similar rows per MSA")->capture_default_str();
  ev->add_option("--k-div", ea->options.k_div, "most divergent rows per MSA")->capture_default_str();
  ev->add_option("--n-unrelated", ea->options.n_unrelated, "unrelated draws per MSA")->capture_default_str();
  ev->callback([&g, ea] { evo(g, *ea, RunClock{}); });

  auto pa = std::make_shared<ProspecctsArgs>();
  auto* ps = app.add_subcommand("prospeccts", "ROC-AUC of cosine similarity over labeled site pairs");
  ps->add_option("--pairs", pa->pairs, "TSV id_a<TAB>id_b<TAB>label")->required();
  ps->add_option("--embeddings", pa->embeddings, "EMB1 of site embeddings")->required();
  ps->callback([&g, pa] { prospeccts(g, *pa, RunClock{}); });
}

}  // namespace onealign::cli
