#pragma once

#include <cstddef>
#include <vector>

namespace onealign {

class Rng;

/// min_size epoch sampling: every modality contributes exactly
/// min(sizes) indices per epoch. Larger modalities are subsampled without
/// replacement (fresh draw each epoch); all lists are shuffled.
/// Throws TooFewPairs if any size is below batch_size or sizes is empty.
std::vector<std::vector<std::size_t>> make_epoch_schedule(const std::vector<std::size_t>& sizes,
                                                          std::size_t batch_size, Rng& rng);

}  // namespace onealign
