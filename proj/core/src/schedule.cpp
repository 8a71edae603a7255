#include "onealign/schedule.hpp"

#include <algorithm>
#include <numeric>

#include "onealign/error.hpp"
#include "onealign/rng.hpp"

namespace onealign {

std::vector<std::vector<std::size_t>> make_epoch_schedule(const std::vector<std::size_t>& sizes,
                                                          std::size_t batch_size, Rng& rng) {
  if (sizes.empty()) fail(ErrorCode::TooFewPairs, "no paired modality to train");
  if (batch_size == 0) fail(ErrorCode::InvalidArgument, "batch size must be positive");
  for (std::size_t m = 0; m < sizes.size(); ++m) {
    if (sizes[m] < batch_size) {
      fail(ErrorCode::TooFewPairs, std::to_string(sizes[m]) + " training pairs < batch size " +
                                       std::to_string(batch_size), m);
    }
  }
  const std::size_t min_size = *std::min_element(sizes.begin(), sizes.end());
  std::vector<std::vector<std::size_t>> out;
  out.reserve(sizes.size());
  for (std::size_t size : sizes) {
    std::vector<std::size_t> idx(size);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    rng.shuffle(idx);
    idx.resize(min_size);
    out.push_back(std::move(idx));
  }
  return out;
}

}  // namespace onealign
