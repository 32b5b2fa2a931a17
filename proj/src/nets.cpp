#include "afford/nets.hpp"

#include <cmath>

#include "afford/error.hpp"

namespace afford::nets {

namespace {

Tensor gaussian_tensor(Rng& rng, std::vector<std::size_t> shape, double sd) {
  Tensor t(std::move(shape));
  for (auto& v : t.data) v = rng.normal(0.0, sd);
  return t;
}

}  // namespace

void add_dense(ParameterStore& ps, Rng& rng, const std::string& prefix,
               std::size_t in, std::size_t out, bool output_layer) {
  const double sd = output_layer ? std::sqrt(1.0 / static_cast<double>(in))
                                 : std::sqrt(2.0 / static_cast<double>(in));
  ps.add(prefix + ".w", gaussian_tensor(rng, {in, out}, sd));
  ps.add(prefix + ".b", Tensor({out}));
}

void add_mlp3(ParameterStore& ps, Rng& rng, const std::string& prefix,
              std::size_t in, std::size_t hidden, std::size_t out) {
  add_dense(ps, rng, prefix + ".l0", in, hidden, false);
  add_dense(ps, rng, prefix + ".l1", hidden, hidden, false);
  add_dense(ps, rng, prefix + ".l2", hidden, out, true);
}

void add_conv_encoder(ParameterStore& ps, Rng& rng, const std::string& prefix,
                      std::size_t side, const std::array<std::size_t, 3>& widths,
                      std::size_t fc_extra_in, std::size_t out) {
  require(side % 8 == 0, "conv encoder: image side must be divisible by 8");
  std::size_t in_ch = 1;
  for (std::size_t i = 0; i < 3; ++i) {
    const double sd = std::sqrt(2.0 / static_cast<double>(in_ch * 9));
    ps.add(prefix + ".conv" + std::to_string(i) + ".k",
           gaussian_tensor(rng, {widths[i], in_ch, 3, 3}, sd));
    ps.add(prefix + ".conv" + std::to_string(i) + ".b", Tensor({widths[i]}));
    in_ch = widths[i];
  }
  const std::size_t feat = widths[2] * (side / 8) * (side / 8);
  add_dense(ps, rng, prefix + ".fc", feat + fc_extra_in, out, true);
}

void add_deconv_decoder(ParameterStore& ps, Rng& rng, const std::string& prefix,
                        std::size_t in, std::size_t side,
                        const std::array<std::size_t, 3>& widths) {
  require(side % 8 == 0, "deconv decoder: image side must be divisible by 8");
  const std::size_t feat = widths[2] * (side / 8) * (side / 8);
  add_dense(ps, rng, prefix + ".fc", in, feat, false);
  const std::size_t chain[4] = {widths[2], widths[1], widths[0], 1};
  for (std::size_t i = 0; i < 3; ++i) {
    const double sd = std::sqrt(2.0 / static_cast<double>(chain[i] * 16));
    ps.add(prefix + ".deconv" + std::to_string(i) + ".k",
           gaussian_tensor(rng, {chain[i], chain[i + 1], 4, 4}, sd));
    ps.add(prefix + ".deconv" + std::to_string(i) + ".b", Tensor({chain[i + 1]}));
  }
}

ValueId dense(Tape& t, ValueId x, const std::string& prefix) {
  return t.add_row_bias(t.matmul(x, t.parameter(prefix + ".w")), t.parameter(prefix + ".b"));
}

ValueId mlp3(Tape& t, ValueId x, const std::string& prefix) {
  ValueId h = t.relu(dense(t, x, prefix + ".l0"));
  h = t.relu(dense(t, h, prefix + ".l1"));
  return dense(t, h, prefix + ".l2");
}

ValueId conv_encoder(Tape& t, ValueId img, const std::string& prefix,
                     std::size_t side, const std::array<std::size_t, 3>& widths,
                     ValueId extra) {
  ValueId h = img;
  for (std::size_t i = 0; i < 3; ++i) {
    h = t.relu(t.conv2d(h, t.parameter(prefix + ".conv" + std::to_string(i) + ".k"),
                        t.parameter(prefix + ".conv" + std::to_string(i) + ".b"), 2, 1));
  }
  const std::size_t feat = widths[2] * (side / 8) * (side / 8);
  h = t.reshape(h, {1, feat});
  if (extra >= 0) h = t.concat_cols(h, extra);
  return dense(t, h, prefix + ".fc");
}

ValueId deconv_decoder(Tape& t, ValueId x, const std::string& prefix,
                       std::size_t side, const std::array<std::size_t, 3>& widths) {
  const std::size_t s8 = side / 8;
  ValueId h = t.relu(dense(t, x, prefix + ".fc"));
  h = t.reshape(h, {widths[2], s8, s8});
  h = t.relu(t.deconv2d(h, t.parameter(prefix + ".deconv0.k"), t.parameter(prefix + ".deconv0.b"), 2, 1));
  h = t.relu(t.deconv2d(h, t.parameter(prefix + ".deconv1.k"), t.parameter(prefix + ".deconv1.b"), 2, 1));
  h = t.deconv2d(h, t.parameter(prefix + ".deconv2.k"), t.parameter(prefix + ".deconv2.b"), 2, 1);
  return t.reshape(h, {1, side * side});
}

ValueId gaussian_nll(Tape& t, ValueId mu, ValueId sigma, ValueId target) {
  const ValueId z = t.div(t.sub(target, mu), sigma);
  const ValueId elem = t.add(t.log(sigma), t.affine(t.square(z), 0.5, 0.0));
  // + 0.5*ln(2*pi)
  return t.affine(t.mean_all(elem), 1.0, 0.9189385332046727);
}

}  // namespace afford::nets
