#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "afford/dataspec.hpp"
#include "afford/gradient_check.hpp"
#include "afford/optim.hpp"
#include "afford/rng.hpp"
#include "afford/tape.hpp"

namespace afford::model {

struct ModelHyper {
  std::size_t latent_dim = 128;
  std::size_t hidden_width = 128;
  std::array<std::size_t, 3> conv_widths{16, 32, 64};
  std::size_t t_steps = 100;
  std::size_t image_side = 32;
  double sigma_floor = 1e-4;
};

// Per-channel encoders/decoders plus hyperparameters. Immutable after
// training; snapshots may be shared across threads for inference.
struct ModelParameters {
  ModelHyper hyper;
  std::vector<data::ChannelSpec> channels;
  num::ParameterStore params;

  const data::ChannelSpec& channel(const std::string& name) const;
  bool has_channel(const std::string& name) const;
};

// Zero-valued parameter skeleton (used by persistence) and the seeded
// random initialization.
ModelParameters make_model(std::vector<data::ChannelSpec> channels, const ModelHyper& hyper);
ModelParameters init_model(std::vector<data::ChannelSpec> channels, const ModelHyper& hyper,
                           std::uint64_t seed);

void write_model(const ModelParameters& mp, const std::string& path);  // magic "AFFM"
ModelParameters read_model(const std::string& path);

struct ChannelPrediction {
  num::Tensor mu;     // trajectory: [n, dim]; image: [H, W]
  num::Tensor sigma;  // trajectory: [n, dim]; image: [1] scalar
};
using Predictions = std::map<std::string, ChannelPrediction>;

// Encoder applied per observation, results averaged in index order.
num::Tensor encode_channel(const ModelParameters& mp, const std::string& channel,
                           const std::vector<data::ConditionPoint>& observations);
num::Tensor encode_channel(const ModelParameters& mp, const std::string& channel,
                           const num::Tensor& image);

// Exact convex combination; null latent with nonzero weight is an error, as
// is a weight vector off the simplex by more than 1e-9. A one-hot weight
// returns the selected latent bitwise.
num::Tensor blend_latents(const std::vector<const num::Tensor*>& latents,
                          const std::vector<double>& weights);

// Hierarchical weights over the given channel subset: Dirichlet(1,..) draws
// when rng is provided (agents within the action modality, then modalities),
// equal weights otherwise.
std::vector<double> hierarchical_weights(const std::vector<data::ChannelSpec>& channels,
                                         const std::vector<std::size_t>& subset,
                                         num::Rng* rng);

ChannelPrediction decode_channel(const ModelParameters& mp, const std::string& channel,
                                 const num::Tensor& latent, const std::vector<double>& times);

struct TrainConfig {
  std::int64_t iterations = 30000;
  std::int64_t snapshot_every = 0;  // 0 = no snapshots
  std::uint64_t seed = 0;
  num::AdamConfig adam;
};

struct TrainStepResult {
  double loss = 0.0;
  std::vector<std::string> selected;  // channels that fed the blend
  std::vector<std::string> decoded;   // channels covered by the loss
};

TrainStepResult train_step(ModelParameters& mp, num::AdamOptimizer& opt,
                           const data::AffordanceSample& sample, num::Rng& rng);

using SnapshotFn = std::function<void(std::int64_t step, const ModelParameters&)>;

// Uniformly samples the given dataset; returns the per-step loss curve.
std::vector<double> train(ModelParameters& mp, const data::Dataset& ds, const TrainConfig& cfg,
                          const SnapshotFn& snapshot = nullptr);

// Replay-based continuation: per step a fair coin picks the old or new pool
// (uniform within the pool); an empty pool degenerates to plain train on the
// other, with identical sampling.
std::vector<double> continue_training(ModelParameters& mp, const data::Dataset& old_ds,
                                      const data::Dataset& new_ds, const TrainConfig& cfg,
                                      const SnapshotFn& snapshot = nullptr);

// Deterministic inference: encode observed channels, blend with hierarchical
// equal weights, decode requested channels (trajectories at request.times or
// the canonical grid; images once).
Predictions generate(const ModelParameters& mp, const data::GenerationRequest& request);

// The full train-step loss with frozen random draws, for gradient checking.
num::LossBuilder train_loss_builder(const ModelParameters& mp,
                                    const data::AffordanceSample& sample, std::uint64_t seed);

void check_dataset_compatible(const ModelParameters& mp, const data::Dataset& ds);

}  // namespace afford::model
