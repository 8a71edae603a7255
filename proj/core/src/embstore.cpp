#include "onealign/embstore.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "onealign/binio.hpp"
#include "onealign/error.hpp"

namespace onealign {
namespace {

constexpr std::string_view kEmb1Magic = "EMB1";
constexpr std::string_view kEmbtMagic = "EMBT";
constexpr std::uint32_t kFormatVersion = 1;

std::unordered_map<std::string, std::size_t> index_ids(const std::vector<std::string>& ids) {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i].empty()) fail(ErrorCode::EmptyId, "empty id", i);
    if (ids[i].find('\n') != std::string::npos) {
      fail(ErrorCode::InvalidArgument, "id contains a newline", i);
    }
    if (!index.emplace(ids[i], i).second) fail(ErrorCode::DuplicateId, ids[i], i);
  }
  return index;
}

void check_finite_rows(std::span<const float> data, std::size_t width,
                       std::span<const std::uint64_t> row_starts) {
  // row_starts gives the first element (in units of `width`) of every row.
  for (std::size_t r = 0; r + 1 < row_starts.size(); ++r) {
    for (std::size_t k = row_starts[r] * width; k < row_starts[r + 1] * width; ++k) {
      if (!std::isfinite(data[k])) fail(ErrorCode::NonFiniteValue, "row " + std::to_string(r), r);
    }
  }
}

void write_ids(binio::Writer& w, const std::vector<std::string>& ids) {
  std::string blob;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) blob.push_back('\n');
    blob += ids[i];
  }
  w.u64(blob.size());
  w.bytes(blob);
}

std::vector<std::string> read_ids(binio::Reader& r, std::uint64_t n_rows) {
  const std::uint64_t len = r.u64();
  r.require(len, 1);
  std::string_view blob = r.bytes(len);
  std::vector<std::string> ids;
  if (n_rows == 0) {
    if (!blob.empty()) fail(ErrorCode::CountMismatch, "id blob present for zero rows");
    return ids;
  }
  if (!blob.empty() && blob.back() == '\n') blob.remove_suffix(1);
  std::size_t start = 0;
  while (true) {
    const auto nl = blob.find('\n', start);
    ids.emplace_back(blob.substr(start, nl == std::string_view::npos ? nl : nl - start));
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  if (ids.size() != n_rows) {
    fail(ErrorCode::CountMismatch, "header declares " + std::to_string(n_rows) + " rows, id blob has " +
                                       std::to_string(ids.size()));
  }
  return ids;
}

void expect_magic(binio::Reader& r, std::string_view magic) {
  if (r.remaining() < magic.size() || r.bytes(magic.size()) != magic) {
    fail(ErrorCode::BadMagic, "expected " + std::string(magic));
  }
  const auto version = r.u32();
  if (version != kFormatVersion) {
    fail(ErrorCode::UnsupportedVersion, "version " + std::to_string(version));
  }
}

void expect_end(const binio::Reader& r) {
  if (r.remaining() != 0) {
    fail(ErrorCode::CountMismatch, std::to_string(r.remaining()) + " trailing bytes after payload");
  }
}

ModalityId default_modality(const std::filesystem::path& path) {
  return ModalityId{path.stem().string(), false};
}

}  // namespace

void validate_modality_name(std::string_view name) {
  if (name.empty() || name.size() > 32) {
    fail(ErrorCode::InvalidArgument, "modality name must be 1..32 bytes: '" + std::string(name) + "'");
  }
  for (unsigned char c : name) {
    if (c <= 0x20 || c >= 0x7f) {
      fail(ErrorCode::InvalidArgument, "modality name must be printable ASCII: '" + std::string(name) + "'");
    }
  }
}

EmbeddingSet::EmbeddingSet(ModalityId modality, std::vector<std::string> ids, std::size_t dim,
                           std::vector<float> data)
    : modality_(std::move(modality)), ids_(std::move(ids)), dim_(dim), data_(std::move(data)) {
  if (dim_ == 0) fail(ErrorCode::InvalidArgument, "embedding dim must be positive");
  if (data_.size() != ids_.size() * dim_) {
    fail(ErrorCode::CountMismatch, "payload has " + std::to_string(data_.size()) + " values, expected " +
                                       std::to_string(ids_.size() * dim_));
  }
  for (std::size_t r = 0; r < ids_.size(); ++r) {
    for (float v : row(r)) {
      if (!std::isfinite(v)) fail(ErrorCode::NonFiniteValue, "row " + std::to_string(r), r);
    }
  }
  index_ = index_ids(ids_);
}

std::optional<std::size_t> EmbeddingSet::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenEmbeddingSet::TokenEmbeddingSet(ModalityId modality, std::vector<std::string> ids,
                                     std::size_t channels, std::vector<std::uint64_t> offsets,
                                     std::vector<float> data, std::vector<std::uint8_t> masks)
    : modality_(std::move(modality)),
      ids_(std::move(ids)),
      channels_(channels),
      offsets_(std::move(offsets)),
      data_(std::move(data)),
      masks_(std::move(masks)) {
  if (channels_ == 0) fail(ErrorCode::InvalidArgument, "token channels must be positive");
  if (offsets_.size() != ids_.size() + 1) {
    fail(ErrorCode::CountMismatch, "offset table must have n_rows + 1 entries");
  }
  if (offsets_.front() != 0) fail(ErrorCode::OffsetOverlap, "offsets must start at 0", 0);
  for (std::size_t i = 0; i + 1 < offsets_.size(); ++i) {
    if (offsets_[i + 1] <= offsets_[i]) {
      fail(ErrorCode::OffsetOverlap, "offsets not strictly increasing at row " + std::to_string(i), i);
    }
  }
  const std::uint64_t total = offsets_.back();
  if (data_.size() != total * channels_ || masks_.size() != total) {
    fail(ErrorCode::CountMismatch, "token payload size disagrees with offsets");
  }
  check_finite_rows(data_, channels_, offsets_);
  for (std::size_t r = 0; r < ids_.size(); ++r) {
    bool any = false;
    for (auto m : mask(r)) {
      if (m > 1) fail(ErrorCode::BadMask, "mask byte not in {0,1} at row " + std::to_string(r), r);
      any = any || m == 1;
    }
    if (!any) fail(ErrorCode::EmptyMask, "row " + std::to_string(r), r);
  }
  index_ = index_ids(ids_);
}

std::optional<std::size_t> TokenEmbeddingSet::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string encode_emb1(const EmbeddingSet& set) {
  binio::Writer w;
  w.bytes(kEmb1Magic);
  w.u32(kFormatVersion);
  w.u64(set.size());
  w.u64(set.dim());
  for (float v : set.data()) w.f32(v);
  write_ids(w, set.ids());
  return w.take();
}

EmbeddingSet decode_emb1(std::string_view bytes, ModalityId modality) {
  binio::Reader r(bytes);
  expect_magic(r, kEmb1Magic);
  const auto n_rows = r.u64();
  const auto dim = r.u64();
  if (dim == 0) fail(ErrorCode::InvalidArgument, "dim 0");
  if (n_rows != 0 && dim > (~std::uint64_t{0} / 4) / n_rows) fail(ErrorCode::TruncatedFile, "absurd header");
  r.require(n_rows * dim, 4);
  std::vector<float> data(n_rows * dim);
  for (auto& v : data) v = r.f32();
  auto ids = read_ids(r, n_rows);
  expect_end(r);
  return EmbeddingSet(std::move(modality), std::move(ids), dim, std::move(data));
}

std::string encode_embt(const TokenEmbeddingSet& set) {
  binio::Writer w;
  w.bytes(kEmbtMagic);
  w.u32(kFormatVersion);
  w.u64(set.size());
  w.u64(set.channels());
  for (auto o : set.offsets()) w.u64(o);
  for (float v : set.data()) w.f32(v);
  for (auto m : set.masks()) w.u8(m);
  write_ids(w, set.ids());
  return w.take();
}

TokenEmbeddingSet decode_embt(std::string_view bytes, ModalityId modality) {
  binio::Reader r(bytes);
  expect_magic(r, kEmbtMagic);
  const auto n_rows = r.u64();
  const auto channels = r.u64();
  if (channels == 0) fail(ErrorCode::InvalidArgument, "C_in 0");
  r.require(n_rows, 8);
  std::vector<std::uint64_t> offsets(n_rows + 1);
  for (auto& o : offsets) o = r.u64();
  if (offsets.front() != 0) fail(ErrorCode::OffsetOverlap, "offsets must start at 0", 0);
  for (std::size_t i = 0; i < n_rows; ++i) {
    if (offsets[i + 1] <= offsets[i]) {
      fail(ErrorCode::OffsetOverlap, "offsets not strictly increasing at row " + std::to_string(i), i);
    }
  }
  const std::uint64_t total = offsets.back();
  if (total != 0 && channels > (~std::uint64_t{0} / 4) / total) fail(ErrorCode::TruncatedFile, "absurd header");
  r.require(total * channels, 4);
  std::vector<float> data(total * channels);
  for (auto& v : data) v = r.f32();
  r.require(total, 1);
  std::vector<std::uint8_t> masks(total);
  for (auto& m : masks) m = r.u8();
  auto ids = read_ids(r, n_rows);
  expect_end(r);
  return TokenEmbeddingSet(std::move(modality), std::move(ids), channels, std::move(offsets),
                           std::move(data), std::move(masks));
}

EmbeddingSet load_pooled_embeddings(const std::filesystem::path& path,
                                    std::optional<ModalityId> modality) {
  return decode_emb1(binio::read_file(path), modality.value_or(default_modality(path)));
}

TokenEmbeddingSet load_token_embeddings(const std::filesystem::path& path,
                                        std::optional<ModalityId> modality) {
  return decode_embt(binio::read_file(path), modality.value_or(default_modality(path)));
}

void save_pooled_embeddings(const std::filesystem::path& path, const EmbeddingSet& set) {
  binio::write_file(path, encode_emb1(set));
}

void save_token_embeddings(const std::filesystem::path& path, const TokenEmbeddingSet& set) {
  binio::write_file(path, encode_embt(set));
}

// ---------------------------------------------------------------------------

const ModalityId& ModalityStore::modality() const {
  return std::visit([](const auto& s) -> const ModalityId& { return s.modality(); }, payload_);
}

std::size_t ModalityStore::size() const {
  return std::visit([](const auto& s) { return s.size(); }, payload_);
}

std::size_t ModalityStore::width() const {
  if (is_tokens()) return tokens().channels();
  return pooled().dim();
}

const std::vector<std::string>& ModalityStore::ids() const {
  return std::visit([](const auto& s) -> const std::vector<std::string>& { return s.ids(); }, payload_);
}

std::optional<std::size_t> ModalityStore::find(std::string_view id) const {
  return std::visit([&](const auto& s) { return s.find(id); }, payload_);
}

std::size_t Workspace::anchor_index() const {
  std::optional<std::size_t> found;
  for (std::size_t i = 0; i < modalities.size(); ++i) {
    if (modalities[i].modality().is_anchor) {
      if (found) fail(ErrorCode::InvalidArgument, "more than one anchor modality");
      found = i;
    }
  }
  if (!found) fail(ErrorCode::NoAnchorModality, "workspace has no anchor modality");
  return *found;
}

const ModalityStore* Workspace::find(std::string_view name) const {
  for (const auto& m : modalities) {
    if (m.name() == name) return &m;
  }
  return nullptr;
}

std::optional<std::size_t> Workspace::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < modalities.size(); ++i) {
    if (modalities[i].name() == name) return i;
  }
  return std::nullopt;
}

Workspace load_workspace(const std::filesystem::path& workspace_json) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(binio::read_file(workspace_json));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, workspace_json.string() + ": " + e.what());
  }
  const auto base = workspace_json.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
  };
  Workspace ws;
  std::set<std::string> names;
  try {
    for (const auto& m : j.at("modalities")) {
      ModalityId id{m.at("name").get<std::string>(), m.value("anchor", false)};
      validate_modality_name(id.name);
      if (!names.insert(id.name).second) fail(ErrorCode::InvalidArgument, "duplicate modality " + id.name);
      const auto file = resolve(m.at("file").get<std::string>());
      const auto magic = binio::read_file(file).substr(0, 4);
      if (magic == kEmbtMagic) {
        ws.modalities.emplace_back(load_token_embeddings(file, id));
      } else {
        ws.modalities.emplace_back(load_pooled_embeddings(file, id));
      }
    }
    if (j.contains("manifest")) ws.manifest_path = resolve(j.at("manifest").get<std::string>());
    if (j.contains("clusters")) ws.cluster_path = resolve(j.at("clusters").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, workspace_json.string() + ": " + e.what());
  }
  (void)ws.anchor_index();
  return ws;
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    case Split::unassigned: return "unassigned";
  }
  return "unassigned";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "val" || s == "valid" || s == "validation") return Split::val;
  if (s == "test") return Split::test;
  fail(ErrorCode::ParseError, "unknown split '" + std::string(s) + "'");
}

std::vector<std::string_view> split_tsv(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? tab : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

std::vector<std::string_view> data_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty() && line.front() != '#') out.push_back(line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return out;
}

std::vector<ManifestRow> parse_manifest(std::string_view text) {
  std::vector<ManifestRow> rows;
  for (auto line : data_lines(text)) {
    auto f = split_tsv(line);
    if (f.size() < 3) fail(ErrorCode::ParseError, "manifest row needs 3 columns: '" + std::string(line) + "'");
    rows.push_back({std::string(f[0]), std::string(f[1]), std::string(f[2])});
  }
  return rows;
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
  return parse_manifest(binio::read_file(path));
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestRow> rows) {
  std::string out;
  for (const auto& r : rows) out += r.anchor_id + "\t" + r.other_id + "\t" + r.modality + "\n";
  binio::write_file(path, out);
}

std::vector<const Pair*> PairedDataset::select(std::string_view modality, Split split) const {
  std::vector<const Pair*> out;
  for (const auto& p : pairs) {
    if (p.modality == modality && p.split == split) out.push_back(&p);
  }
  return out;
}

PairedDataset build_paired_dataset(std::span<const ManifestRow> rows, const Workspace& ws,
                                   bool allow_missing, DropReport* report) {
  const auto anchor_idx = ws.anchor_index();
  const auto& anchor = ws.modalities[anchor_idx];
  PairedDataset ds;
  ds.anchor = anchor.name();
  for (const auto& m : ws.modalities) {
    if (!m.modality().is_anchor) ds.modalities.push_back(m.name());
  }
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const auto mod_idx = ws.index_of(row.modality);
    if (!mod_idx || *mod_idx == anchor_idx) {
      fail(ErrorCode::UnknownModality, "row " + std::to_string(i) + " names '" + row.modality + "'", i);
    }
    const auto a = anchor.find(row.anchor_id);
    const auto b = ws.modalities[*mod_idx].find(row.other_id);
    if (!a || !b) {
      const std::string reason = !a ? "anchor id '" + row.anchor_id + "' not in " + anchor.name()
                                    : "id '" + row.other_id + "' not in " + row.modality;
      if (!allow_missing) fail(ErrorCode::MissingId, reason, i);
      if (report) {
        report->dropped.push_back(row);
        report->reasons.push_back(reason);
      }
      continue;
    }
    if (!seen.emplace(row.anchor_id, row.other_id, row.modality).second) continue;
    ds.pairs.push_back({row.anchor_id, row.other_id, row.modality, *a, *b, Split::unassigned});
  }
  std::sort(ds.pairs.begin(), ds.pairs.end(), [&](const Pair& x, const Pair& y) {
    const auto ix = *ws.index_of(x.modality);
    const auto iy = *ws.index_of(y.modality);
    return std::tie(ix, x.anchor_row, x.other_row) < std::tie(iy, y.anchor_row, y.other_row);
  });
  return ds;
}

PairedDataset build_paired_dataset(const std::filesystem::path& manifest_path, const Workspace& ws,
                                   bool allow_missing, DropReport* report) {
  const auto rows = read_manifest(manifest_path);
  return build_paired_dataset(rows, ws, allow_missing, report);
}

std::map<std::string, std::string> parse_cluster_map(std::string_view text) {
  std::map<std::string, std::string> out;
  for (auto line : data_lines(text)) {
    auto f = split_tsv(line);
    if (f.size() < 2 || f[0].empty() || f[1].empty()) {
      fail(ErrorCode::ParseError, "cluster row needs id<TAB>cluster: '" + std::string(line) + "'");
    }
    out[std::string(f[0])] = std::string(f[1]);
  }
  return out;
}

std::map<std::string, std::string> read_cluster_map(const std::filesystem::path& path) {
  return parse_cluster_map(binio::read_file(path));
}

std::string_view to_string(LabelKind k) {
  switch (k) {
    case LabelKind::regression: return "regression";
    case LabelKind::binary: return "binary";
    case LabelKind::multiclass: return "multiclass";
    case LabelKind::multilabel: return "multilabel";
  }
  return "regression";
}

std::pair<LabelKind, std::size_t> parse_label_kind(std::string_view s) {
  std::size_t k = 0;
  std::string_view head = s;
  if (auto open = s.find('('); open != std::string_view::npos) {
    const auto close = s.find(')', open);
    if (close == std::string_view::npos) fail(ErrorCode::ParseError, "bad task kind '" + std::string(s) + "'");
    const auto num = s.substr(open + 1, close - open - 1);
    auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), k);
    if (ec != std::errc() || p != num.data() + num.size() || k == 0) {
      fail(ErrorCode::ParseError, "bad class count in '" + std::string(s) + "'");
    }
    head = s.substr(0, open);
  }
  if (head == "regression") return {LabelKind::regression, 1};
  if (head == "binary") return {LabelKind::binary, 1};
  if (head == "multiclass") return {LabelKind::multiclass, k};
  if (head == "multilabel") return {LabelKind::multilabel, k};
  fail(ErrorCode::ParseError, "unknown task kind '" + std::string(s) + "'");
}

namespace {

double parse_double(std::string_view s, std::size_t line_no) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    fail(ErrorCode::BadLabel, "cannot parse '" + std::string(s) + "'", line_no);
  }
  return v;
}

}  // namespace

LabelTable parse_labels(std::string_view text, std::string task_name, LabelKind kind,
                        std::size_t num_classes) {
  LabelTable t;
  t.task_name = std::move(task_name);
  t.kind = kind;
  std::size_t line_no = 0;
  std::size_t max_class = 0;
  std::size_t width = 0;
  for (auto line : data_lines(text)) {
    auto f = split_tsv(line);
    if (f.size() < 2 || f[0].empty()) fail(ErrorCode::BadLabel, "need id<TAB>values", line_no);
    std::vector<double> values;
    std::string_view rest = f[1];
    std::size_t start = 0;
    while (true) {
      const auto comma = rest.find(',', start);
      values.push_back(parse_double(rest.substr(start, comma == std::string_view::npos ? comma : comma - start), line_no));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    for (double v : values) {
      if (!std::isfinite(v)) fail(ErrorCode::BadLabel, "non-finite label", line_no);
    }
    switch (kind) {
      case LabelKind::regression:
        if (values.size() != 1) fail(ErrorCode::BadLabel, "regression label must be scalar", line_no);
        break;
      case LabelKind::binary:
        if (values.size() != 1 || (values[0] != 0.0 && values[0] != 1.0)) {
          fail(ErrorCode::BadLabel, "binary label must be 0 or 1", line_no);
        }
        break;
      case LabelKind::multiclass: {
        if (values.size() != 1 || values[0] < 0 || values[0] != std::floor(values[0])) {
          fail(ErrorCode::BadLabel, "multiclass label must be a class index", line_no);
        }
        max_class = std::max(max_class, static_cast<std::size_t>(values[0]));
        break;
      }
      case LabelKind::multilabel:
        for (double v : values) {
          if (v != 0.0 && v != 1.0) fail(ErrorCode::BadLabel, "multilabel entries must be 0/1", line_no);
        }
        if (width == 0) width = values.size();
        if (values.size() != width) fail(ErrorCode::BadLabel, "ragged multilabel vector", line_no);
        break;
    }
    if (!t.rows.emplace(std::string(f[0]), std::move(values)).second) {
      fail(ErrorCode::DuplicateId, std::string(f[0]), line_no);
    }
    ++line_no;
  }
  switch (kind) {
    case LabelKind::regression:
    case LabelKind::binary:
      t.num_classes = 1;
      break;
    case LabelKind::multiclass:
      if (num_classes == 0) num_classes = max_class + 1;
      if (max_class >= num_classes) fail(ErrorCode::BadLabel, "class index out of range [0,k)");
      t.num_classes = num_classes;
      break;
    case LabelKind::multilabel:
      if (num_classes != 0 && width != num_classes && !t.rows.empty()) {
        fail(ErrorCode::BadLabel, "multilabel width disagrees with declared k");
      }
      t.num_classes = t.rows.empty() ? num_classes : width;
      break;
  }
  return t;
}

LabelTable read_labels(const std::filesystem::path& path, std::string task_name, LabelKind kind,
                       std::size_t num_classes) {
  return parse_labels(binio::read_file(path), std::move(task_name), kind, num_classes);
}

std::map<std::string, Split> read_split_file(const std::filesystem::path& path) {
  std::map<std::string, Split> out;
  const std::string text = binio::read_file(path);
  for (auto line : data_lines(text)) {
    auto f = split_tsv(line);
    if (f.size() < 2) fail(ErrorCode::ParseError, "split row needs id<TAB>split");
    out[std::string(f[0])] = parse_split(f[1]);
  }
  return out;
}

}  // namespace onealign
