#pragma once

#include <functional>
#include <string>

#include "afford/tape.hpp"

namespace afford::num {

// Builds a scalar loss on the given tape, reading whatever parameters it
// needs from the tape's store. Must be deterministic: the checker calls it
// repeatedly under parameter perturbations.
using LossBuilder = std::function<ValueId(Tape&)>;

struct GradientCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t probes = 0;
};

// Compares reverse-mode gradients against central finite differences
// (f(x+h)-f(x-h))/2h over every element of every parameter. Relative error
// is |bw - fd| / max(|fd|, 1e-6), so a gradient that is wrong by a factor of
// two reports ~1.
GradientCheckReport gradient_check(ParameterStore& params, const LossBuilder& build,
                                   double h = 1e-5);

}  // namespace afford::num
