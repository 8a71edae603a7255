#include "onealign/checkpoint.hpp"

#include <map>

#include "onealign/binio.hpp"
#include "onealign/error.hpp"

namespace onealign {
namespace {

constexpr std::string_view kMagic = "OPC1";
constexpr std::uint32_t kVersion = 1;

struct Record {
  std::vector<std::size_t> shape;
  std::vector<float> data;
};

void put_record(binio::Writer& w, const std::string& name, const std::vector<std::size_t>& shape,
                const std::vector<double>& values) {
  w.u32(static_cast<std::uint32_t>(name.size()));
  w.bytes(name);
  w.u32(static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) w.u64(d);
  for (double v : values) w.f32(static_cast<float>(v));
}

std::vector<std::vector<std::size_t>> lists_of(const nlohmann::json& j) {
  return j.get<std::vector<std::vector<std::size_t>>>();
}

}  // namespace

std::string encode_checkpoint(const AlignConfig& config, const TrainState& state) {
  nlohmann::json st;
  st["step"] = state.step;
  st["epoch"] = state.epoch;
  st["cursor"] = state.cursor;
  st["rng"] = state.rng.state();
  st["updates"] = state.updates;
  std::vector<std::uint64_t> t;
  for (const auto& o : state.opt) t.push_back(o.t);
  st["adam_t"] = t;
  st["log_tau"] = state.log_tau;
  st["tau_adam_t"] = state.tau_opt.t;
  st["epoch_lists"] = state.epoch_lists;
  const std::string blob = nlohmann::json{{"config", config}, {"state", st}}.dump();

  binio::Writer w;
  w.bytes(kMagic);
  w.u32(kVersion);
  w.u64(blob.size());
  w.bytes(blob);

  std::uint64_t count = 0;
  binio::Writer body;
  const auto& heads = state.heads;
  for (std::size_t h = 0; h < heads.size(); ++h) {
    for (const Param* p : heads[h].params()) {
      put_record(body, p->name, p->shape, p->value);
      ++count;
    }
  }
  for (std::size_t h = 0; h < heads.size(); ++h) {
    const auto& opt = state.opt[h];
    std::size_t k = 0;
    for (const Param* p : heads[h].params()) {
      if (!p->trainable || opt.m.empty()) continue;
      put_record(body, "opt/" + p->name + "/m", p->shape, opt.m[k]);
      put_record(body, "opt/" + p->name + "/v", p->shape, opt.v[k]);
      count += 2;
      ++k;
    }
  }
  if (!state.tau_opt.m.empty()) {
    put_record(body, "opt/log_tau/m", {1}, state.tau_opt.m[0]);
    put_record(body, "opt/log_tau/v", {1}, state.tau_opt.v[0]);
    count += 2;
  }
  w.u64(count);
  w.bytes(body.data());
  return w.take();
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  binio::Reader r(bytes);
  if (r.remaining() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) {
    fail(ErrorCode::BadMagic, "not an OPC1 checkpoint");
  }
  const auto version = r.u32();
  if (version != kVersion) fail(ErrorCode::UnsupportedVersion, "OPC1 version " + std::to_string(version));
  const auto len = r.u64();
  r.require(len, 1);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(r.bytes(len));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::BadCheckpoint, std::string("config blob: ") + e.what());
  }

  std::map<std::string, Record> records;
  const auto count = r.u64();
  r.require(count, 12);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = r.u32();
    std::string name(r.bytes(name_len));
    Record rec;
    const auto ndim = r.u32();
    r.require(ndim, 8);
    std::uint64_t total = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      rec.shape.push_back(r.u64());
      total *= rec.shape.back();
    }
    r.require(total, 4);
    rec.data.resize(total);
    for (auto& v : rec.data) v = r.f32();
    if (!records.emplace(name, std::move(rec)).second) fail(ErrorCode::BadCheckpoint, "duplicate record " + name);
  }
  if (r.remaining() != 0) fail(ErrorCode::BadCheckpoint, "trailing bytes after records");

  Checkpoint ck;
  try {
    ck.config = doc.at("config").get<AlignConfig>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::BadCheckpoint, std::string("config: ") + e.what());
  }
  TrainState& s = ck.state;
  for (const auto& spec : ck.config.heads) s.heads.emplace_back(spec, ck.config.shared_dim);

  auto take = [&](const std::string& name, const std::vector<std::size_t>& shape, std::vector<double>& dst) {
    auto it = records.find(name);
    if (it == records.end()) fail(ErrorCode::BadCheckpoint, "missing record " + name);
    if (it->second.shape != shape) fail(ErrorCode::BadCheckpoint, "shape mismatch for " + name);
    dst.assign(it->second.data.begin(), it->second.data.end());
    records.erase(it);
  };

  try {
    const auto& st = doc.at("state");
    s.step = st.at("step").get<std::uint64_t>();
    s.epoch = st.at("epoch").get<std::uint64_t>();
    s.cursor = st.at("cursor").get<std::size_t>();
    s.rng.set_state(st.at("rng").get<std::string>());
    s.updates = st.at("updates").get<std::vector<std::uint64_t>>();
    const auto adam_t = st.at("adam_t").get<std::vector<std::uint64_t>>();
    s.log_tau = st.at("log_tau").get<double>();
    s.epoch_lists = lists_of(st.at("epoch_lists"));
    if (adam_t.size() != s.heads.size() || s.updates.size() != s.heads.size()) {
      fail(ErrorCode::BadCheckpoint, "state arrays do not match head count");
    }
    s.tau_opt.hyper = ck.config.adam;
    s.tau_opt.f32_storage = true;
    s.tau_opt.t = st.at("tau_adam_t").get<std::uint64_t>();
    for (std::size_t h = 0; h < s.heads.size(); ++h) {
      AdamWState opt;
      opt.hyper = ck.config.adam;
      opt.f32_storage = true;
      opt.t = adam_t[h];
      ParamList params = s.heads[h].params();
      for (Param* p : params) take(p->name, p->shape, p->value);
      if (opt.t > 0) {
        for (Param* p : params) {
          if (!p->trainable) continue;
          take("opt/" + p->name + "/m", p->shape, opt.m.emplace_back());
          take("opt/" + p->name + "/v", p->shape, opt.v.emplace_back());
        }
      }
      s.opt.push_back(std::move(opt));
    }
    if (s.tau_opt.t > 0) {
      take("opt/log_tau/m", {1}, s.tau_opt.m.emplace_back());
      take("opt/log_tau/v", {1}, s.tau_opt.v.emplace_back());
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::BadCheckpoint, std::string("state: ") + e.what());
  }
  if (!records.empty()) fail(ErrorCode::BadCheckpoint, "unexpected record " + records.begin()->first);
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const AlignConfig& config, const TrainState& state) {
  binio::write_file(path, encode_checkpoint(config, state));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(binio::read_file(path));
}

}  // namespace onealign
