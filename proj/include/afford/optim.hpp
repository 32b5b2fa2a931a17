#pragma once

#include <cstdint>
#include <unordered_map>

#include "afford/params.hpp"

namespace afford::num {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard Adam with bias correction. Only parameters that received a
// gradient this step are updated; their moment accumulators match the
// parameter shapes and the step counter is strictly increasing.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(ParameterStore& params, const GradientMap& grads);
  std::int64_t steps() const { return step_; }
  const AdamConfig& config() const { return cfg_; }
  const Tensor& first_moment(const std::string& name) const;
  const Tensor& second_moment(const std::string& name) const;

 private:
  struct Moments {
    Tensor m, v;
  };
  AdamConfig cfg_;
  std::int64_t step_ = 0;
  std::unordered_map<std::string, Moments> moments_;
};

}  // namespace afford::num
