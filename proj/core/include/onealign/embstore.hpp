#pragma once

// Immutable per-modality embedding sets, pair manifests, labels and
// cluster-aware splits.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace onealign {

struct ModalityId {
  std::string name;
  bool is_anchor = false;

  friend bool operator==(const ModalityId&, const ModalityId&) = default;
};

/// Throws InvalidArgument unless the name is nonempty, <= 32 bytes and ASCII
/// without whitespace or control characters.
void validate_modality_name(std::string_view name);

/// Row-major f32 matrix keyed by unique string ids.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;
  EmbeddingSet(ModalityId modality, std::vector<std::string> ids, std::size_t dim,
               std::vector<float> data);

  const ModalityId& modality() const noexcept { return modality_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<const float> data() const noexcept { return data_; }
  std::optional<std::size_t> find(std::string_view id) const;

 private:
  ModalityId modality_;
  std::vector<std::string> ids_;
  std::size_t dim_ = 0;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Ragged per-row token matrices [L_i x C_in] with binary masks.
class TokenEmbeddingSet {
 public:
  TokenEmbeddingSet() = default;
  /// `offsets` is the prefix sum of token counts (size n_rows + 1).
  TokenEmbeddingSet(ModalityId modality, std::vector<std::string> ids, std::size_t channels,
                    std::vector<std::uint64_t> offsets, std::vector<float> data,
                    std::vector<std::uint8_t> masks);

  const ModalityId& modality() const noexcept { return modality_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t length(std::size_t i) const { return offsets_[i + 1] - offsets_[i]; }
  std::span<const float> tokens(std::size_t i) const {
    return {data_.data() + offsets_[i] * channels_, length(i) * channels_};
  }
  std::span<const std::uint8_t> mask(std::size_t i) const {
    return {masks_.data() + offsets_[i], length(i)};
  }
  const std::vector<std::uint64_t>& offsets() const noexcept { return offsets_; }
  std::span<const float> data() const noexcept { return data_; }
  std::span<const std::uint8_t> masks() const noexcept { return masks_; }
  std::optional<std::size_t> find(std::string_view id) const;

 private:
  ModalityId modality_;
  std::vector<std::string> ids_;
  std::size_t channels_ = 0;
  std::vector<std::uint64_t> offsets_{0};
  std::vector<float> data_;
  std::vector<std::uint8_t> masks_;
  std::unordered_map<std::string, std::size_t> index_;
};

// EMB1 / EMBT codecs. Decoders validate everything the constructors check.
std::string encode_emb1(const EmbeddingSet& set);
EmbeddingSet decode_emb1(std::string_view bytes, ModalityId modality);
std::string encode_embt(const TokenEmbeddingSet& set);
TokenEmbeddingSet decode_embt(std::string_view bytes, ModalityId modality);

/// Loads an EMB1 file. The modality name defaults to the file stem.
EmbeddingSet load_pooled_embeddings(const std::filesystem::path& path,
                                    std::optional<ModalityId> modality = std::nullopt);
TokenEmbeddingSet load_token_embeddings(const std::filesystem::path& path,
                                        std::optional<ModalityId> modality = std::nullopt);
void save_pooled_embeddings(const std::filesystem::path& path, const EmbeddingSet& set);
void save_token_embeddings(const std::filesystem::path& path, const TokenEmbeddingSet& set);

/// Either representation of one modality's embeddings.
class ModalityStore {
 public:
  using Payload = std::variant<EmbeddingSet, TokenEmbeddingSet>;

  explicit ModalityStore(Payload payload) : payload_(std::move(payload)) {}

  const ModalityId& modality() const;
  const std::string& name() const { return modality().name; }
  bool is_tokens() const noexcept { return payload_.index() == 1; }
  std::size_t size() const;
  /// Feature width: dim for pooled sets, C_in for token sets.
  std::size_t width() const;
  const std::vector<std::string>& ids() const;
  std::optional<std::size_t> find(std::string_view id) const;

  const EmbeddingSet& pooled() const { return std::get<EmbeddingSet>(payload_); }
  const TokenEmbeddingSet& tokens() const { return std::get<TokenEmbeddingSet>(payload_); }

 private:
  Payload payload_;
};

/// All modalities of one data set, in registration order.
struct Workspace {
  std::vector<ModalityStore> modalities;
  std::filesystem::path manifest_path;
  std::filesystem::path cluster_path;

  std::size_t anchor_index() const;
  const ModalityStore& anchor() const { return modalities[anchor_index()]; }
  const ModalityStore* find(std::string_view name) const;
  std::optional<std::size_t> index_of(std::string_view name) const;
};

/// Reads workspace JSON:
/// {"modalities":[{"name","anchor","file"}...], "manifest", "clusters"}.
/// Relative paths resolve against the JSON file's directory.
Workspace load_workspace(const std::filesystem::path& workspace_json);

enum class Split : std::uint8_t { train = 0, val = 1, test = 2, unassigned = 3 };
std::string_view to_string(Split s);
Split parse_split(std::string_view s);

struct ManifestRow {
  std::string anchor_id;
  std::string other_id;
  std::string modality;
};

struct Pair {
  std::string anchor_id;
  std::string other_id;
  std::string modality;
  std::size_t anchor_row = 0;
  std::size_t other_row = 0;
  Split split = Split::unassigned;

  friend bool operator==(const Pair&, const Pair&) = default;
};

struct PairedDataset {
  std::string anchor;
  /// Non-anchor modalities in registration order.
  std::vector<std::string> modalities;
  /// Sorted by (modality registration order, anchor row, other row).
  std::vector<Pair> pairs;
  std::map<std::string, std::string> cluster_of;

  std::vector<const Pair*> select(std::string_view modality, Split split) const;
};

struct DropReport {
  std::vector<ManifestRow> dropped;
  std::vector<std::string> reasons;
};

std::vector<ManifestRow> parse_manifest(std::string_view text);
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, std::span<const ManifestRow> rows);

/// Resolves manifest rows against the workspace. Rows with unknown IDs are an
/// error unless `allow_missing`, in which case they are dropped and reported.
PairedDataset build_paired_dataset(std::span<const ManifestRow> rows, const Workspace& ws,
                                   bool allow_missing, DropReport* report = nullptr);
PairedDataset build_paired_dataset(const std::filesystem::path& manifest_path,
                                   const Workspace& ws, bool allow_missing,
                                   DropReport* report = nullptr);

std::map<std::string, std::string> parse_cluster_map(std::string_view text);
std::map<std::string, std::string> read_cluster_map(const std::filesystem::path& path);

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

/// Assigns whole clusters to splits: cluster labels are ordered by a hash
/// keyed on `seed`, then cut at the cumulative fractions. Every pair takes
/// the split of its anchor's cluster.
PairedDataset split_by_cluster(PairedDataset dataset,
                               const std::map<std::string, std::string>& cluster_map,
                               SplitFractions fractions, std::uint64_t seed);

/// TSV `anchor_id<TAB>other_id<TAB>modality<TAB>split`.
void write_split_pairs(const std::filesystem::path& path, const PairedDataset& ds);
struct SplitRow {
  ManifestRow row;
  std::optional<Split> split;
};
std::vector<SplitRow> read_split_pairs(const std::filesystem::path& path);

enum class LabelKind { regression, binary, multiclass, multilabel };
std::string_view to_string(LabelKind k);

struct LabelTable {
  std::string task_name;
  LabelKind kind = LabelKind::regression;
  /// k for multiclass/multilabel, 1 otherwise.
  std::size_t num_classes = 1;
  std::map<std::string, std::vector<double>> rows;
};

/// Parses "regression", "binary", "multiclass(10)", "multilabel(585)";
/// the bare forms "multiclass"/"multilabel" leave num_classes = 0 (infer).
std::pair<LabelKind, std::size_t> parse_label_kind(std::string_view s);

LabelTable parse_labels(std::string_view text, std::string task_name, LabelKind kind,
                        std::size_t num_classes = 0);
LabelTable read_labels(const std::filesystem::path& path, std::string task_name, LabelKind kind,
                       std::size_t num_classes = 0);

/// TSV `id<TAB>split`.
std::map<std::string, Split> read_split_file(const std::filesystem::path& path);

/// Splits on '\t'; trailing '\r' removed.
std::vector<std::string_view> split_tsv(std::string_view line);
/// Lines with '#' comments and blank lines skipped.
std::vector<std::string_view> data_lines(std::string_view text);

}  // namespace onealign
