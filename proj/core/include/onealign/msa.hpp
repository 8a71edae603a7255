#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace onealign {

struct MsaRecord {
  std::string name;  // header up to the first whitespace
  std::string sequence;
};

/// FASTA or A3M text. Lines starting with '#' before the first header are
/// ignored; sequence lines are concatenated.
std::vector<MsaRecord> parse_fasta(std::string_view text);
std::vector<MsaRecord> read_msa(const std::filesystem::path& path);

/// Match-state columns of an A3M row: lowercase insertions and '.' removed,
/// remaining characters uppercased.
std::string match_columns(std::string_view aligned);

struct HammingEntry {
  std::size_t index = 0;
  std::size_t distance = 0;
};

/// Mismatch count of every row against row `reference` over match columns
/// (gap vs residue mismatches, gap vs gap matches), sorted ascending with
/// ties in input order. Throws RaggedAlignment, InvalidArgument.
std::vector<HammingEntry> hamming_rank(const std::vector<std::string>& msa, std::size_t reference);

}  // namespace onealign
