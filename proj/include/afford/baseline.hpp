#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "afford/dataspec.hpp"
#include "afford/optim.hpp"
#include "afford/rng.hpp"

namespace afford::baseline {

enum class Loss { Nll, Mse };

// The four Table-style comparator variants: NLL/MSE loss, with/without the
// timestep appended to each channel's state input.
struct BaselineVariant {
  Loss loss = Loss::Nll;
  bool with_time = true;

  std::string name() const;
  static BaselineVariant from_name(const std::string& s);
  static const std::vector<std::string>& all_names();
};

struct BaselineHyper {
  std::size_t embed_dim = 128;
  std::size_t hidden_width = 128;
  std::array<std::size_t, 3> conv_widths{16, 32, 64};
  std::size_t t_steps = 100;
  std::size_t image_side = 32;
  double sigma_floor = 1e-4;
};

// Next-step predictor over concatenated per-channel embeddings with
// representation dropout during training.
struct BaselineParameters {
  BaselineHyper hyper;
  BaselineVariant variant;
  std::vector<data::ChannelSpec> channels;
  num::ParameterStore params;
};

BaselineParameters make_baseline(std::vector<data::ChannelSpec> channels,
                                 const BaselineHyper& hyper, BaselineVariant variant);
BaselineParameters init_baseline(std::vector<data::ChannelSpec> channels,
                                 const BaselineHyper& hyper, BaselineVariant variant,
                                 std::uint64_t seed);

void write_baseline(const BaselineParameters& bp, const std::string& path);  // magic "AFFB"
BaselineParameters read_baseline(const std::string& path);

struct BaselineTrainConfig {
  std::int64_t iterations = 30000;
  std::uint64_t seed = 0;
  num::AdamConfig adam;
};

struct StepDiagnostics {
  double loss = 0.0;
  std::vector<std::string> kept;  // embeddings that survived dropout
};

StepDiagnostics baseline_train_step(BaselineParameters& bp, num::AdamOptimizer& opt,
                                    const data::AffordanceSample& sample, num::Rng& rng);
std::vector<double> baseline_train(BaselineParameters& bp, const data::Dataset& ds,
                                   const BaselineTrainConfig& cfg);

struct RolloutResult {
  // Trajectory per channel [T, dim]: observed channels echo their inputs,
  // everything else evolves from the model's own next-step predictions.
  std::map<std::string, num::Tensor> trajectories;
  num::Tensor image;  // final predicted image (or the observed one)
};

// Observed trajectory channels are teacher-forced from the given [T, dim]
// tensors; unobserved channels start at zero. Pass the image if observed.
RolloutResult baseline_rollout(const BaselineParameters& bp,
                               const std::map<std::string, num::Tensor>& observed,
                               const num::Tensor* observed_image);

}  // namespace afford::baseline
