#include "onealign/msa.hpp"

#include <algorithm>
#include <cctype>

#include "onealign/binio.hpp"
#include "onealign/error.hpp"

namespace onealign {

std::vector<MsaRecord> parse_fasta(std::string_view text) {
  std::vector<MsaRecord> out;
  std::size_t start = 0, line_no = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    start = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '>') {
      line.remove_prefix(1);
      const auto ws = line.find_first_of(" \t");
      out.push_back({std::string(line.substr(0, ws)), {}});
      if (out.back().name.empty()) fail(ErrorCode::ParseError, "empty FASTA header", line_no);
    } else if (line.front() == '#' && out.empty()) {
      continue;
    } else {
      if (out.empty()) fail(ErrorCode::ParseError, "sequence data before the first header", line_no);
      for (char c : line) {
        if (!std::isspace(static_cast<unsigned char>(c))) out.back().sequence.push_back(c);
      }
    }
  }
  return out;
}

std::vector<MsaRecord> read_msa(const std::filesystem::path& path) { return parse_fasta(binio::read_file(path)); }

std::string match_columns(std::string_view aligned) {
  std::string out;
  out.reserve(aligned.size());
  for (char c : aligned) {
    if (c == '.' || std::islower(static_cast<unsigned char>(c))) continue;
    out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return out;
}

std::vector<HammingEntry> hamming_rank(const std::vector<std::string>& msa, std::size_t reference) {
  if (reference >= msa.size()) fail(ErrorCode::InvalidArgument, "reference index out of range");
  std::vector<std::string> cols;
  cols.reserve(msa.size());
  for (const auto& s : msa) cols.push_back(match_columns(s));
  const std::size_t len = cols[reference].size();
  std::vector<HammingEntry> out;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i].size() != len) {
      fail(ErrorCode::RaggedAlignment, "row has " + std::to_string(cols[i].size()) + " match columns, reference " +
                                           std::to_string(len), i);
    }
    std::size_t d = 0;
    for (std::size_t k = 0; k < len; ++k) d += cols[i][k] != cols[reference][k];
    out.push_back({i, d});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const HammingEntry& a, const HammingEntry& b) { return a.distance < b.distance; });
  return out;
}

}  // namespace onealign
