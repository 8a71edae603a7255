#include "onealign/binio.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "onealign/error.hpp"

namespace onealign::binio {

void Writer::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void Writer::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::string_view Reader::bytes(std::size_t n) {
  if (n > remaining()) {
    fail(ErrorCode::TruncatedFile, "need " + std::to_string(n) + " bytes at offset " +
                                       std::to_string(pos_) + ", have " +
                                       std::to_string(remaining()));
  }
  auto out = data_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::uint8_t Reader::u8() { return static_cast<std::uint8_t>(bytes(1)[0]); }

std::uint32_t Reader::u32() {
  auto b = bytes(4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(b[i]);
  return v;
}

std::uint64_t Reader::u64() {
  auto b = bytes(8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(b[i]);
  return v;
}

void Reader::require(std::uint64_t count, std::uint64_t elem_size) {
  if (elem_size != 0 && count > remaining() / elem_size) {
    fail(ErrorCode::TruncatedFile, "header declares " + std::to_string(count) + " x " +
                                       std::to_string(elem_size) + " bytes, only " +
                                       std::to_string(remaining()) + " remain");
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) fail(ErrorCode::IoError, "short write to " + path.string());
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace onealign::binio
