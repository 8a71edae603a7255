#include <algorithm>
#include <cmath>
#include <set>

#include "onealign/binio.hpp"
#include "onealign/embstore.hpp"
#include "onealign/error.hpp"

namespace onealign {

PairedDataset split_by_cluster(PairedDataset dataset,
                               const std::map<std::string, std::string>& cluster_map,
                               SplitFractions fr, std::uint64_t seed) {
  const double sum = fr.train + fr.val + fr.test;
  if (!(fr.train > 0 && fr.val > 0 && fr.test > 0) || std::abs(sum - 1.0) > 1e-9) {
    fail(ErrorCode::BadFractions, "fractions must be positive and sum to 1");
  }
  std::set<std::string> labels;
  dataset.cluster_of.clear();
  for (std::size_t i = 0; i < dataset.pairs.size(); ++i) {
    const auto& p = dataset.pairs[i];
    auto it = cluster_map.find(p.anchor_id);
    if (it == cluster_map.end()) fail(ErrorCode::MissingCluster, p.anchor_id, i);
    dataset.cluster_of[p.anchor_id] = it->second;
    labels.insert(it->second);
  }

  // Keyed hash order; the label itself breaks (astronomically unlikely) ties.
  std::vector<std::pair<std::uint64_t, std::string>> order;
  order.reserve(labels.size());
  for (const auto& label : labels) {
    order.emplace_back(binio::mix64(binio::fnv1a64(label) ^ binio::mix64(seed)), label);
  }
  std::sort(order.begin(), order.end());

  const auto k = static_cast<double>(order.size());
  const auto n_train = static_cast<std::size_t>(std::llround(fr.train * k));
  const auto n_train_val = static_cast<std::size_t>(std::llround((fr.train + fr.val) * k));
  std::map<std::string, Split> split_of;
  for (std::size_t i = 0; i < order.size(); ++i) {
    split_of[order[i].second] = i < std::max<std::size_t>(n_train, 1) ? Split::train
                                : i < n_train_val                     ? Split::val
                                                                      : Split::test;
  }
  for (auto& p : dataset.pairs) p.split = split_of.at(dataset.cluster_of.at(p.anchor_id));
  return dataset;
}

void write_split_pairs(const std::filesystem::path& path, const PairedDataset& ds) {
  std::string out;
  for (const auto& p : ds.pairs) {
    out += p.anchor_id + "\t" + p.other_id + "\t" + p.modality + "\t" + std::string(to_string(p.split)) + "\n";
  }
  binio::write_file(path, out);
}

std::vector<SplitRow> read_split_pairs(const std::filesystem::path& path) {
  std::vector<SplitRow> rows;
  const std::string text = binio::read_file(path);
  for (auto line : data_lines(text)) {
    auto f = split_tsv(line);
    if (f.size() < 3) fail(ErrorCode::ParseError, "pair row needs at least 3 columns");
    SplitRow r{{std::string(f[0]), std::string(f[1]), std::string(f[2])}, std::nullopt};
    if (f.size() >= 4 && !f[3].empty()) r.split = parse_split(f[3]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace onealign
