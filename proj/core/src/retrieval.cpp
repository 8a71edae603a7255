#include "onealign/retrieval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "onealign/contrastive.hpp"
#include "onealign/error.hpp"
#include "onealign/parallel.hpp"

namespace onealign {

std::string_view to_string(TaskKind k) { return k == TaskKind::trained ? "trained" : "emergent"; }

std::vector<RetrievalTask> enumerate_tasks(const std::vector<ModalityId>& modalities) {
  const auto anchors = std::count_if(modalities.begin(), modalities.end(),
                                     [](const ModalityId& m) { return m.is_anchor; });
  if (anchors != 1) fail(ErrorCode::NoAnchor, "need exactly one anchor modality, got " + std::to_string(anchors));
  if (modalities.size() < 2) fail(ErrorCode::InvalidArgument, "need at least two modalities");
  const auto& anchor = *std::find_if(modalities.begin(), modalities.end(),
                                     [](const ModalityId& m) { return m.is_anchor; });
  std::vector<RetrievalTask> tasks;
  for (const auto& m : modalities) {
    if (m.is_anchor) continue;
    tasks.push_back({anchor.name, m.name, TaskKind::trained});
    tasks.push_back({m.name, anchor.name, TaskKind::trained});
  }
  for (const auto& a : modalities) {
    if (a.is_anchor) continue;
    for (const auto& b : modalities) {
      if (b.is_anchor || a.name == b.name) continue;
      tasks.push_back({a.name, b.name, TaskKind::emergent});
    }
  }
  return tasks;
}

Matrix cosine_sim_matrix(const Matrix& q, const Matrix& g, unsigned threads) {
  if (q.cols() != g.cols()) fail(ErrorCode::ShapeMismatch, "query and gallery widths differ");
  require_unit_rows(q);
  require_unit_rows(g);
  Matrix s(q.rows(), g.rows());
  parallel_for(q.rows(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < g.rows(); ++j) s(i, j) = dot(q.row(i), g.row(j));
    }
  });
  return s;
}

namespace {

void require_square(const Matrix& s) {
  if (s.rows() != s.cols() || s.rows() == 0) fail(ErrorCode::ShapeMismatch, "similarity matrix must be square and nonempty");
}

// (# strictly greater, # equal at a smaller index) for the diagonal of row i.
std::pair<std::size_t, std::size_t> row_position(std::span<const double> row, std::size_t i) {
  std::size_t greater = 0, tied_before = 0;
  const double t = row[i];
  for (std::size_t j = 0; j < row.size(); ++j) {
    greater += row[j] > t;
    tied_before += j < i && row[j] == t;
  }
  return {greater, tied_before};
}

std::size_t lower_median(std::vector<std::size_t> v) {
  std::nth_element(v.begin(), v.begin() + (v.size() - 1) / 2, v.end());
  return v[(v.size() - 1) / 2];
}

}  // namespace

double recall_at_k(const Matrix& s, std::size_t k) {
  require_square(s);
  if (k == 0) fail(ErrorCode::InvalidArgument, "k must be >= 1");
  if (k > s.rows()) fail(ErrorCode::KTooLarge, "k = " + std::to_string(k) + " > N = " + std::to_string(s.rows()));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < s.rows(); ++i) {
    auto [greater, tied] = row_position(s.row(i), i);
    hits += greater + tied < k;
  }
  return static_cast<double>(hits) / static_cast<double>(s.rows());
}

std::vector<std::size_t> true_match_ranks(const Matrix& s) {
  require_square(s);
  std::vector<std::size_t> ranks(s.rows());
  for (std::size_t i = 0; i < s.rows(); ++i) ranks[i] = 1 + row_position(s.row(i), i).first;
  return ranks;
}

std::size_t median_rank(const Matrix& s) { return lower_median(true_match_ranks(s)); }

RetrievalMetrics score_retrieval(const Matrix& q, const Matrix& g, unsigned threads) {
  if (q.rows() != g.rows() || q.rows() == 0) fail(ErrorCode::ShapeMismatch, "query/gallery counts differ");
  if (q.cols() != g.cols()) fail(ErrorCode::ShapeMismatch, "query and gallery widths differ");
  require_unit_rows(q);
  require_unit_rows(g);
  const std::size_t n = q.rows();
  std::vector<std::size_t> greater(n), tied(n);
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> row(n);
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < n; ++j) row[j] = dot(q.row(i), g.row(j));
      std::tie(greater[i], tied[i]) = row_position(row, i);
    }
  });
  RetrievalMetrics m;
  m.n = n;
  auto recall = [&](std::size_t k) -> std::optional<double> {
    if (k > n) return std::nullopt;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) hits += greater[i] + tied[i] < k;
    return static_cast<double>(hits) / static_cast<double>(n);
  };
  m.r1 = recall(1);
  m.r10 = recall(10);
  m.r100 = recall(100);
  std::vector<std::size_t> ranks(n);
  for (std::size_t i = 0; i < n; ++i) ranks[i] = greater[i] + 1;
  m.mr = lower_median(std::move(ranks));
  return m;
}

std::set<std::string> train_clusters_of(const PairedDataset& ds) {
  std::set<std::string> out;
  for (const auto& p : ds.pairs) {
    if (p.split != Split::train) continue;
    auto it = ds.cluster_of.find(p.anchor_id);
    if (it != ds.cluster_of.end()) out.insert(it->second);
  }
  return out;
}

AlignmentReport evaluate_alignment(Checkpoint& checkpoint, const Workspace& ws, const PairedDataset& test,
                                   const EvalOptions& options, const std::set<std::string>* train_clusters) {
  if (checkpoint.state.heads.size() != ws.modalities.size()) {
    fail(ErrorCode::BadCheckpoint, "checkpoint heads do not match the workspace modalities");
  }
  for (std::size_t i = 0; i < ws.modalities.size(); ++i) {
    if (checkpoint.state.heads[i].spec().modality != ws.modalities[i].name()) {
      fail(ErrorCode::BadCheckpoint, "head order differs from workspace: " + ws.modalities[i].name());
    }
  }
  if (train_clusters) {
    for (std::size_t i = 0; i < test.pairs.size(); ++i) {
      const auto& p = test.pairs[i];
      auto it = test.cluster_of.find(p.anchor_id);
      if (it != test.cluster_of.end() && train_clusters->count(it->second)) {
        fail(ErrorCode::SplitLeak, "cluster " + it->second + " of test pair " + p.anchor_id + " is in training", i);
      }
    }
  }

  // Per non-anchor modality: anchor row -> other row of its first test pair,
  // in pair order.
  std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> by_mod;
  std::map<std::string, std::map<std::size_t, std::size_t>> lookup;
  for (const auto& p : test.pairs) {
    if (lookup[p.modality].emplace(p.anchor_row, p.other_row).second) {
      by_mod[p.modality].emplace_back(p.anchor_row, p.other_row);
    }
  }

  std::vector<ModalityId> ids;
  for (const auto& m : ws.modalities) ids.push_back(m.modality());
  const std::string& anchor = ws.anchor().name();

  AlignmentReport report;
  report.gallery_limit = options.n;
  for (const auto& task : enumerate_tasks(ids)) {
    std::vector<std::size_t> qrows, grows;
    if (task.kind == TaskKind::trained) {
      const std::string& other = task.query == anchor ? task.gallery : task.query;
      for (const auto& [arow, orow] : by_mod[other]) {
        if (qrows.size() == options.n) break;
        qrows.push_back(task.query == anchor ? arow : orow);
        grows.push_back(task.query == anchor ? orow : arow);
      }
    } else {
      const auto& gl = lookup[task.gallery];
      for (const auto& [arow, qrow] : by_mod[task.query]) {
        if (qrows.size() == options.n) break;
        auto it = gl.find(arow);
        if (it == gl.end()) continue;
        qrows.push_back(qrow);
        grows.push_back(it->second);
      }
    }
    TaskResult tr{task, {}};
    if (!qrows.empty()) {
      const std::size_t qi = *ws.index_of(task.query), gi = *ws.index_of(task.gallery);
      const Matrix q = embed_rows(checkpoint.state.heads[qi], ws.modalities[qi], qrows);
      const Matrix g = embed_rows(checkpoint.state.heads[gi], ws.modalities[gi], grows);
      tr.metrics = score_retrieval(q, g, options.threads);
    }
    report.tasks.push_back(std::move(tr));
  }
  return report;
}

namespace {

nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json summarize(const AlignmentReport& r, TaskKind kind) {
  double mr = 0.0, r1 = 0.0, r10 = 0.0, r100 = 0.0;
  std::size_t count = 0, c10 = 0, c100 = 0;
  for (const auto& t : r.tasks) {
    if (t.task.kind != kind || t.metrics.n == 0) continue;
    ++count;
    mr += static_cast<double>(t.metrics.mr);
    r1 += *t.metrics.r1;
    if (t.metrics.r10) { r10 += *t.metrics.r10; ++c10; }
    if (t.metrics.r100) { r100 += *t.metrics.r100; ++c100; }
  }
  nlohmann::json j{{"tasks", count}};
  if (count == 0) return j;
  const double c = static_cast<double>(count);
  j["mean_mr"] = mr / c;
  j["mean_r1"] = r1 / c;
  j["mean_r10"] = c10 ? nlohmann::json(r10 / static_cast<double>(c10)) : nlohmann::json(nullptr);
  j["mean_r100"] = c100 ? nlohmann::json(r100 / static_cast<double>(c100)) : nlohmann::json(nullptr);
  return j;
}

}  // namespace

nlohmann::json report_json(const AlignmentReport& report) {
  nlohmann::json tasks = nlohmann::json::object();
  for (const auto& t : report.tasks) {
    tasks[t.task.key()] = {{"query", t.task.query},
                           {"gallery", t.task.gallery},
                           {"kind", to_string(t.task.kind)},
                           {"n", t.metrics.n},
                           {"r1", opt_json(t.metrics.r1)},
                           {"r10", opt_json(t.metrics.r10)},
                           {"r100", opt_json(t.metrics.r100)},
                           {"mr", t.metrics.mr}};
  }
  return {{"tasks", tasks},
          {"gallery_limit", report.gallery_limit},
          {"summary", {{"trained", summarize(report, TaskKind::trained)},
                       {"emergent", summarize(report, TaskKind::emergent)}}}};
}

std::string report_csv(const AlignmentReport& report) {
  std::string out = "task,query,gallery,kind,n,r1,r10,r100,mr\n";
  auto fmt = [](const std::optional<double>& v) {
    if (!v) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return std::string(buf);
  };
  for (const auto& t : report.tasks) {
    out += t.task.key() + "," + t.task.query + "," + t.task.gallery + "," + std::string(to_string(t.task.kind)) +
           "," + std::to_string(t.metrics.n) + "," + fmt(t.metrics.r1) + "," + fmt(t.metrics.r10) + "," +
           fmt(t.metrics.r100) + "," + std::to_string(t.metrics.mr) + "\n";
  }
  return out;
}

}  // namespace onealign
