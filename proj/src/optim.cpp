#include "afford/optim.hpp"

#include <cmath>

#include "afford/error.hpp"

namespace afford::num {

void AdamOptimizer::step(ParameterStore& params, const GradientMap& grads) {
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (const auto& [name, g] : grads) {
    require(g.all_finite(), "adam: non-finite gradient for " + name);
    Tensor& p = params.at(name);
    require(p.same_shape(g), "adam: gradient shape mismatch for " + name);
    auto [it, inserted] = moments_.try_emplace(name);
    if (inserted) {
      it->second.m = Tensor(p.shape);
      it->second.v = Tensor(p.shape);
    }
    Tensor& m = it->second.m;
    Tensor& v = it->second.v;
    for (std::size_t i = 0; i < p.numel(); ++i) {
      m.data[i] = cfg_.beta1 * m.data[i] + (1.0 - cfg_.beta1) * g.data[i];
      v.data[i] = cfg_.beta2 * v.data[i] + (1.0 - cfg_.beta2) * g.data[i] * g.data[i];
      const double mhat = m.data[i] / bc1;
      const double vhat = v.data[i] / bc2;
      p.data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

const Tensor& AdamOptimizer::first_moment(const std::string& name) const {
  auto it = moments_.find(name);
  require(it != moments_.end(), "adam: no moments for " + name);
  return it->second.m;
}

const Tensor& AdamOptimizer::second_moment(const std::string& name) const {
  auto it = moments_.find(name);
  require(it != moments_.end(), "adam: no moments for " + name);
  return it->second.v;
}

}  // namespace afford::num
