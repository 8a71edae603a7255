#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "onealign/checkpoint.hpp"
#include "onealign/embstore.hpp"
#include "onealign/tensor.hpp"

namespace onealign {

enum class TaskKind { trained, emergent };
std::string_view to_string(TaskKind k);

struct RetrievalTask {
  std::string query;
  std::string gallery;
  TaskKind kind = TaskKind::trained;

  std::string key() const { return query + "->" + gallery; }
  friend bool operator==(const RetrievalTask&, const RetrievalTask&) = default;
};

/// 2(n-1) trained tasks (anchor <-> each modality, both directions) followed
/// by (n-1)(n-2) emergent tasks between ordered non-anchor pairs.
/// Throws NoAnchor unless exactly one modality is the anchor.
std::vector<RetrievalTask> enumerate_tasks(const std::vector<ModalityId>& modalities);

/// S[i][j] = q_i . g_j. Throws NotNormalized.
Matrix cosine_sim_matrix(const Matrix& q, const Matrix& g, unsigned threads = 1);

/// Fraction of rows whose diagonal entry is within the top k; equal scores
/// are ordered by column index. Throws KTooLarge when k > N.
double recall_at_k(const Matrix& s, std::size_t k);

/// Rank of the diagonal entry in each row: 1 + #{j : S[i][j] > S[i][i]}.
std::vector<std::size_t> true_match_ranks(const Matrix& s);
/// Lower median of true_match_ranks.
std::size_t median_rank(const Matrix& s);

struct RetrievalMetrics {
  std::size_t n = 0;
  std::optional<double> r1, r10, r100;
  std::size_t mr = 0;
};

/// All metrics from unit-row embeddings without materializing S.
RetrievalMetrics score_retrieval(const Matrix& q, const Matrix& g, unsigned threads = 1);

struct TaskResult {
  RetrievalTask task;
  RetrievalMetrics metrics;
};

struct AlignmentReport {
  std::vector<TaskResult> tasks;
  std::size_t gallery_limit = 0;
};

struct EvalOptions {
  std::size_t n = 4000;
  unsigned threads = 1;
};

/// Embeds the first N matched test items per task through the trained heads
/// (emergent tasks match by shared anchor id, no anchor embeddings used).
/// Throws SplitLeak when a test pair's cluster also holds training pairs.
AlignmentReport evaluate_alignment(Checkpoint& checkpoint, const Workspace& ws,
                                   const PairedDataset& test, const EvalOptions& options,
                                   const std::set<std::string>* train_clusters = nullptr);

/// Cluster labels holding training pairs under the checkpoint's split.
std::set<std::string> train_clusters_of(const PairedDataset& split_dataset);

nlohmann::json report_json(const AlignmentReport& report);
std::string report_csv(const AlignmentReport& report);

}  // namespace onealign
