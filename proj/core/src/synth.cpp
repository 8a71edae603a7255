#include "onealign/synth.hpp"

#include <cmath>
#include <cstdio>

#include "onealign/binio.hpp"
#include "onealign/error.hpp"
#include "onealign/rng.hpp"
#include "onealign/tensor.hpp"

namespace onealign {

void to_json(nlohmann::json& j, const SynthConfig& c) {
  nlohmann::json mods = nlohmann::json::array();
  for (const auto& m : c.modalities) {
    mods.push_back({{"name", m.name},
                    {"dim", m.dim},
                    {"noise_sigma", m.noise_sigma},
                    {"presence_prob", m.presence_prob},
                    {"anchor", m.anchor},
                    {"tokens", m.tokens},
                    {"min_len", m.min_len},
                    {"max_len", m.max_len},
                    {"max_pad", m.max_pad},
                    {"jitter", m.jitter}});
  }
  j = {{"n_items", c.n_items},
       {"latent_dim", c.latent_dim},
       {"items_per_cluster", c.items_per_cluster},
       {"seed", c.seed},
       {"modalities", mods}};
}

void from_json(const nlohmann::json& j, SynthConfig& c) {
  c.n_items = j.value("n_items", c.n_items);
  c.latent_dim = j.value("latent_dim", c.latent_dim);
  c.items_per_cluster = j.value("items_per_cluster", c.items_per_cluster);
  c.seed = j.value("seed", c.seed);
  if (j.contains("modalities")) {
    c.modalities.clear();
    for (const auto& mj : j["modalities"]) {
      SynthModality m;
      m.name = mj.at("name").get<std::string>();
      m.dim = mj.value("dim", m.dim);
      m.noise_sigma = mj.value("noise_sigma", m.noise_sigma);
      m.presence_prob = mj.value("presence_prob", m.presence_prob);
      m.anchor = mj.value("anchor", m.anchor);
      m.tokens = mj.value("tokens", m.tokens);
      m.min_len = mj.value("min_len", m.min_len);
      m.max_len = mj.value("max_len", m.max_len);
      m.max_pad = mj.value("max_pad", m.max_pad);
      m.jitter = mj.value("jitter", m.jitter);
      c.modalities.push_back(m);
    }
  }
}

SynthConfig synth_preset(const std::string& name) {
  SynthConfig c;
  if (name == "emergence") {
    c.n_items = 10000;
    c.latent_dim = 128;
    SynthModality seq{"seq", 64, 0.3, 1.0, true, true};
    c.modalities = {seq, {"struct_graph", 64, 0.3}, {"pocket", 64, 0.3}, {"text", 64, 0.3}};
  } else if (name == "baseline") {
    c.n_items = 5000;
    c.latent_dim = 256;
    c.modalities = {{"seq", 256, 0.3, 1.0, true}, {"text", 256, 0.3}};
  } else if (name == "small") {
    c.n_items = 600;
    c.latent_dim = 16;
    SynthModality seq{"seq", 16, 0.3, 1.0, true, true};
    c.modalities = {seq, {"struct_graph", 16, 0.3, 0.8}, {"text", 12, 0.3, 0.6}};
  } else {
    fail(ErrorCode::InvalidArgument, "unknown synth preset '" + name + "'");
  }
  return c;
}

namespace {

std::string item_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "P%06zu", i);
  return buf;
}

void validate(const SynthConfig& c) {
  if (c.n_items == 0 || c.latent_dim == 0) fail(ErrorCode::InvalidArgument, "n_items and latent_dim must be positive");
  std::size_t anchors = 0;
  for (const auto& m : c.modalities) {
    validate_modality_name(m.name);
    if (m.dim == 0) fail(ErrorCode::InvalidArgument, m.name + ": dim must be positive");
    if (!(m.presence_prob > 0.0 && m.presence_prob <= 1.0)) {
      fail(ErrorCode::InvalidArgument, m.name + ": presence_prob must lie in (0, 1]");
    }
    if (m.anchor && m.presence_prob != 1.0) fail(ErrorCode::InvalidArgument, m.name + ": the anchor is always present");
    if (m.tokens && (m.min_len == 0 || m.min_len > m.max_len)) {
      fail(ErrorCode::InvalidArgument, m.name + ": need 0 < min_len <= max_len");
    }
    anchors += m.anchor;
  }
  if (anchors != 1) fail(ErrorCode::NoAnchorModality, "synth config needs exactly one anchor");
}

}  // namespace

SynthData generate(const SynthConfig& config) {
  validate(config);
  Rng rng(config.seed);
  const std::size_t n = config.n_items, d = config.latent_dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  std::vector<std::vector<double>> maps;
  for (const auto& m : config.modalities) {
    auto& w = maps.emplace_back(m.dim * d);
    for (auto& v : w) v = rng.normal() * scale;
  }
  std::vector<double> z(n * d);
  for (auto& v : z) v = rng.normal();

  SynthData out;
  for (std::size_t mi = 0; mi < config.modalities.size(); ++mi) {
    const auto& m = config.modalities[mi];
    std::vector<std::string> ids;
    std::vector<float> data;
    std::vector<std::uint64_t> offsets{0};
    std::vector<std::uint8_t> masks;
    std::vector<double> view(m.dim);
    for (std::size_t i = 0; i < n; ++i) {
      if (!m.anchor && !rng.bernoulli(m.presence_prob)) continue;
      const std::span<const double> zi(z.data() + i * d, d);
      for (std::size_t k = 0; k < m.dim; ++k) {
        view[k] = dot(std::span<const double>(maps[mi].data() + k * d, d), zi) + m.noise_sigma * rng.normal();
      }
      ids.push_back(item_id(i));
      if (!m.tokens) {
        for (double v : view) data.push_back(static_cast<float>(v));
        continue;
      }
      const std::size_t len = m.min_len + rng.below(m.max_len - m.min_len + 1);
      const std::size_t pad = rng.below(m.max_pad + 1);
      for (std::size_t t = 0; t < len; ++t) {
        for (double v : view) data.push_back(static_cast<float>(v + m.jitter * rng.normal()));
        masks.push_back(1);
      }
      for (std::size_t t = 0; t < pad; ++t) {
        for (std::size_t k = 0; k < m.dim; ++k) data.push_back(static_cast<float>(3.0 * rng.normal()));
        masks.push_back(0);
      }
      offsets.push_back(offsets.back() + len + pad);
    }
    ModalityId id{m.name, m.anchor};
    if (m.tokens) {
      out.modalities.emplace_back(TokenEmbeddingSet(id, std::move(ids), m.dim, std::move(offsets), std::move(data),
                                                    std::move(masks)));
    } else {
      out.modalities.emplace_back(EmbeddingSet(id, std::move(ids), m.dim, std::move(data)));
    }
  }
  for (const auto& store : out.modalities) {
    if (store.modality().is_anchor) continue;
    for (const auto& id : store.ids()) out.manifest.push_back({id, id, store.name()});
  }

  const std::size_t k = std::max<std::size_t>(1, n / std::max<std::size_t>(1, config.items_per_cluster));
  std::vector<double> centroids(2 * k);
  for (auto& v : centroids) v = rng.normal();
  const std::size_t c0 = 0, c1 = std::min<std::size_t>(1, d - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    double best_d = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      const double a = z[i * d + c0] - centroids[2 * c], b = z[i * d + c1] - centroids[2 * c + 1];
      const double dist = a * a + b * b;
      if (c == 0 || dist < best_d) {
        best = c;
        best_d = dist;
      }
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "C%05zu", best);
    out.clusters[item_id(i)] = buf;
  }
  return out;
}

std::filesystem::path write_synth(const std::filesystem::path& dir, const SynthData& data) {
  nlohmann::json mods = nlohmann::json::array();
  for (const auto& store : data.modalities) {
    const std::string file = store.name() + (store.is_tokens() ? ".embt" : ".emb1");
    if (store.is_tokens()) {
      save_token_embeddings(dir / file, store.tokens());
    } else {
      save_pooled_embeddings(dir / file, store.pooled());
    }
    mods.push_back({{"name", store.name()}, {"anchor", store.modality().is_anchor}, {"file", file}});
  }
  write_manifest(dir / "manifest.tsv", data.manifest);
  std::string clusters;
  for (const auto& [id, label] : data.clusters) clusters += id + "\t" + label + "\n";
  binio::write_file(dir / "clusters.tsv", clusters);
  const auto path = dir / "workspace.json";
  nlohmann::json ws{{"modalities", mods}, {"manifest", "manifest.tsv"}, {"clusters", "clusters.tsv"}};
  binio::write_file(path, ws.dump(2) + "\n");
  return path;
}

namespace {

constexpr std::string_view kAlphabet = "ACDEFGHIKLMNPQRSTVWY";

}  // namespace

MsaFamilies generate_msa_families(const MsaFamilyConfig& c) {
  if (c.families == 0 || c.members < 2 || c.length == 0 || c.embed_dim == 0 || c.max_step == 0) {
    fail(ErrorCode::InvalidArgument, "msa family sizes must be positive");
  }
  Rng rng(c.seed);
  MsaFamilies out;
  std::vector<std::string> ids;
  std::vector<float> data;
  for (std::size_t f = 0; f < c.families; ++f) {
    std::vector<std::string> seqs;
    std::vector<std::vector<double>> lat;
    std::string root(c.length, 'A');
    for (char& ch : root) ch = kAlphabet[rng.below(kAlphabet.size())];
    seqs.push_back(root);
    auto& z0 = lat.emplace_back(c.embed_dim);
    for (auto& v : z0) v = rng.normal();
    for (std::size_t j = 1; j < c.members; ++j) {
      const std::size_t parent = rng.below(j);
      std::string s = seqs[parent];
      const std::size_t steps = 1 + rng.below(c.max_step);
      for (std::size_t k = 0; k < steps; ++k) {
        const std::size_t pos = rng.below(c.length);
        // One in ten substitutions is a deletion relative to the root.
        s[pos] = rng.below(10) == 0 ? '-' : kAlphabet[rng.below(kAlphabet.size())];
      }
      std::vector<double> zj = lat[parent];
      const double sd = c.drift * std::sqrt(static_cast<double>(steps));
      for (auto& v : zj) v += sd * rng.normal();
      seqs.push_back(std::move(s));
      lat.push_back(std::move(zj));
    }
    auto& msa = out.msas.emplace_back();
    for (std::size_t j = 0; j < c.members; ++j) {
      char name[32];
      std::snprintf(name, sizeof name, "F%03zu_%04zu", f, j);
      std::string row = seqs[j];
      // Sprinkle a3m insertions (lowercase) into non-root rows.
      if (j > 0 && rng.below(4) == 0) {
        const std::size_t at = rng.below(row.size() + 1);
        row.insert(at, 1, static_cast<char>(kAlphabet[rng.below(kAlphabet.size())] - 'A' + 'a'));
      }
      msa.push_back({name, std::move(row)});
      ids.push_back(name);
      for (double v : lat[j]) data.push_back(static_cast<float>(v));
    }
  }
  out.embeddings = EmbeddingSet({"seq", true}, std::move(ids), c.embed_dim, std::move(data));
  return out;
}

void write_msa_families(const std::filesystem::path& dir, const MsaFamilies& fam) {
  for (std::size_t f = 0; f < fam.msas.size(); ++f) {
    std::string text;
    for (const auto& r : fam.msas[f]) text += ">" + r.name + "\n" + r.sequence + "\n";
    char name[32];
    std::snprintf(name, sizeof name, "family_%03zu.a3m", f);
    binio::write_file(dir / name, text);
  }
  save_pooled_embeddings(dir / "sequences.emb1", fam.embeddings);
}

}  // namespace onealign
