#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "afford/tensor.hpp"

namespace afford::data {

enum class ChannelKind { Trajectory, Image };

std::string kind_name(ChannelKind k);
ChannelKind kind_from_name(const std::string& s);

// Declaration of one modality stream. Trajectory channels carry [length, dim]
// values over implicit uniform time t = i/(length-1); image channels carry a
// single [height, width] frame (length 1, dim = height*width).
struct ChannelSpec {
  std::string name;
  ChannelKind kind = ChannelKind::Trajectory;
  std::size_t dim = 1;
  std::size_t length = 1;
  std::string units;  // radians | newtons | meters | normalized-depth
  std::string agent;  // owning agent for action channels, empty otherwise
  std::size_t height = 0, width = 0;  // image channels only

  bool is_action() const { return kind == ChannelKind::Trajectory && !agent.empty(); }
  void validate() const;

  friend bool operator==(const ChannelSpec&, const ChannelSpec&) = default;
};

std::string channels_to_json_string(const std::vector<ChannelSpec>& channels);
std::vector<ChannelSpec> channels_from_json_string(const std::string& text);

// Evaluation-only bookkeeping; never fed to the model.
struct SampleMeta {
  std::string label;        // object identity, e.g. "w=0.15" or "sphere"
  double object_param = 0;  // opening half-width / object size / orientation
  std::string outcome;      // ground-truth effect class
  std::string split;        // "train" | "test"
  std::string direction;    // rollability push direction
  std::string variant;      // action style or sample layout tag
};

// One interaction record. payload[i] corresponds to channels[i] of the owning
// dataset; unavailable channels have mask 0 and an empty payload tensor.
struct AffordanceSample {
  std::vector<num::Tensor> payload;
  std::vector<std::uint8_t> mask;
  SampleMeta meta;

  bool available(std::size_t ch) const { return ch < mask.size() && mask[ch] != 0; }
};

struct Dataset {
  std::vector<ChannelSpec> channels;
  std::vector<AffordanceSample> samples;
  std::string scenario;
  std::string generator_config;  // JSON provenance blob from synthgen

  std::size_t channel_index(const std::string& name) const;
  const ChannelSpec* find_channel(const std::string& name) const;
  void validate() const;
  // Indices of samples with the given split label.
  std::vector<std::size_t> split_indices(const std::string& split) const;
  Dataset subset(const std::vector<std::size_t>& indices) const;
  // Distinct sample labels in first-appearance order.
  std::vector<std::string> labels() const;
};

// Conditioning specification for generation. Trajectory channels carry
// (t, value) condition points with t in [0,1]; image channels carry the
// image alone.
struct ConditionPoint {
  double t = 0.0;
  std::vector<double> value;
};

struct ObservedChannel {
  std::string name;
  std::vector<ConditionPoint> points;  // trajectory channels
  num::Tensor image;                   // image channels
};

struct GenerationRequest {
  std::vector<ObservedChannel> observed;
  std::vector<std::string> outputs;
  std::vector<double> times;  // target times; empty = model's canonical grid

  std::string to_json() const;
  static GenerationRequest from_json(const std::string& text);
};

// Bit-exact container formats (see docs/formats.md). Round trips are
// byte-for-byte lossless; the availability mask is authoritative.
void write_dataset(const Dataset& ds, const std::string& path);
Dataset read_dataset(const std::string& path);

// Linear resampling of a [T',dim] trajectory onto T uniform times; endpoints
// are preserved exactly.
num::Tensor resample_trajectory(const num::Tensor& values, std::size_t target_len);

// Uniform canonical grid t_i = i/(n-1).
std::vector<double> time_grid(std::size_t n);

// Named-array container shared by model snapshots ("AFFM") and baseline
// snapshots ("AFFB"): hyperparameter JSON plus ordered weight arrays.
struct ArrayFile {
  std::string magic;      // 4 chars
  std::string meta_json;  // hyperparameters, channel specs, array directory
  std::vector<std::pair<std::string, num::Tensor>> arrays;
};

void write_array_file(const ArrayFile& f, const std::string& path);
ArrayFile read_array_file(const std::string& path, const std::string& expect_magic);

}  // namespace afford::data
