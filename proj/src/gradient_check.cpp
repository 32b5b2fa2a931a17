#include "afford/gradient_check.hpp"

#include <cmath>

#include "afford/error.hpp"

namespace afford::num {

namespace {

double eval_loss(ParameterStore& params, const LossBuilder& build) {
  Tape tape(&params);
  const ValueId loss = build(tape);
  return tape.scalar(loss);
}

}  // namespace

GradientCheckReport gradient_check(ParameterStore& params, const LossBuilder& build, double h) {
  require(h > 0.0, "gradient_check: h must be positive");

  Tape tape(&params);
  const ValueId loss = build(tape);
  GradientMap analytic = tape.backward(loss);

  GradientCheckReport report;
  for (const auto& name : params.names()) {
    Tensor& p = params.at(name);
    const auto it = analytic.find(name);
    for (std::size_t i = 0; i < p.numel(); ++i) {
      const double saved = p.data[i];
      p.data[i] = saved + h;
      const double lp = eval_loss(params, build);
      p.data[i] = saved - h;
      const double lm = eval_loss(params, build);
      p.data[i] = saved;

      const double fd = (lp - lm) / (2.0 * h);
      const double bw = (it == analytic.end()) ? 0.0 : it->second.data[i];
      const double rel = std::fabs(bw - fd) / std::max(std::fabs(fd), 1e-6);
      ++report.probes;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = name;
        report.worst_index = i;
      }
    }
  }
  return report;
}

}  // namespace afford::num
