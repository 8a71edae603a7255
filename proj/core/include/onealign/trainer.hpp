#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "onealign/embstore.hpp"
#include "onealign/heads.hpp"
#include "onealign/optim.hpp"
#include "onealign/rng.hpp"

namespace onealign {

struct AlignConfig {
  double temperature = 1.0;
  bool learnable_tau = false;
  std::size_t batch_size = 32;
  std::size_t steps = 1000;
  std::size_t shared_dim = 512;
  AdamWHyper adam;
  std::uint64_t seed = 0;
  /// Data provenance, used to rebuild splits at evaluation time.
  std::string workspace;
  SplitFractions fractions;
  std::uint64_t split_seed = 0;
  /// One per modality in workspace registration order (anchor included).
  std::vector<HeadSpec> heads;
};

void to_json(nlohmann::json& j, const AlignConfig& c);
void from_json(const nlohmann::json& j, AlignConfig& c);

/// Fills missing head specs from the workspace (default_head_spec) and
/// checks the listed ones against modality widths and kinds.
void complete_head_specs(AlignConfig& config, const Workspace& ws);

/// Training pairs (anchor row, other row) per non-anchor modality, in
/// registration order.
struct TrainPairs {
  std::vector<std::size_t> modality;  // workspace index of each entry below
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> rows;
};

/// Collects train-split pairs from a split dataset.
TrainPairs collect_train_pairs(const PairedDataset& ds, const Workspace& ws);

struct TrainState {
  /// Indexed by workspace registration order.
  std::vector<ProjectionHead> heads;
  std::vector<AdamWState> opt;
  std::vector<std::uint64_t> updates;
  double log_tau = 0.0;
  AdamWState tau_opt;
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
  std::size_t cursor = 0;
  std::vector<std::vector<std::size_t>> epoch_lists;
  Rng rng;
};

/// Builds and initializes heads, rounding everything to f32 storage.
TrainState init_train_state(const AlignConfig& config);

struct LossRecord {
  std::uint64_t step = 0;
  std::string modality;
  double loss = 0.0;
};

/// Batch of head inputs for the given rows of one modality.
HeadInput gather_rows(const ModalityStore& store, std::span<const std::size_t> rows);

/// One optimizer step: for each paired modality in registration order,
/// forward anchor and modality heads, symmetric InfoNCE, backward, and an
/// AdamW update of just those two heads.
std::vector<LossRecord> train_step(const AlignConfig& config, TrainState& state,
                                   const Workspace& ws, const TrainPairs& pairs);

using StepCallback = std::function<void(const TrainState&, const std::vector<LossRecord>&)>;

/// Runs until state.step == config.steps. Resumes from any saved state.
std::vector<LossRecord> train(const AlignConfig& config, TrainState& state, const Workspace& ws,
                              const TrainPairs& pairs, const StepCallback& on_step = {});

std::string loss_csv(const std::vector<LossRecord>& log);

/// Unit-norm embeddings of the given rows through a head in eval mode.
Matrix embed_rows(ProjectionHead& head, const ModalityStore& store, std::span<const std::size_t> rows,
                  std::size_t batch = 256);

}  // namespace onealign
