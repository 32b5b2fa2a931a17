#pragma once

#include <array>
#include <string>

#include "afford/rng.hpp"
#include "afford/tape.hpp"

// Graph building blocks shared by the blended-latent model and the
// concatenation baseline: dense/MLP stacks, the strided conv image encoder
// and its transposed-conv mirror. Parameter registration and the forward
// builders use the same naming scheme so persistence can enumerate arrays.
namespace afford::nets {

using num::ParameterStore;
using num::Rng;
using num::Tape;
using num::Tensor;
using num::ValueId;

// He-style init for hidden relu layers, 1/fan_in for output layers.
void add_dense(ParameterStore& ps, Rng& rng, const std::string& prefix,
               std::size_t in, std::size_t out, bool output_layer);
// prefix.w0/b0 relu prefix.w1/b1 relu prefix.w2/b2 (linear out).
void add_mlp3(ParameterStore& ps, Rng& rng, const std::string& prefix,
              std::size_t in, std::size_t hidden, std::size_t out);
// Three stride-2 3x3 convs plus a dense head: side must be divisible by 8.
void add_conv_encoder(ParameterStore& ps, Rng& rng, const std::string& prefix,
                      std::size_t side, const std::array<std::size_t, 3>& widths,
                      std::size_t fc_extra_in, std::size_t out);
// Dense seed + three stride-2 4x4 transposed convs back to [1, side, side].
void add_deconv_decoder(ParameterStore& ps, Rng& rng, const std::string& prefix,
                        std::size_t in, std::size_t side,
                        const std::array<std::size_t, 3>& widths);

ValueId dense(Tape& t, ValueId x, const std::string& prefix);
ValueId mlp3(Tape& t, ValueId x, const std::string& prefix);
// img [1, side, side] plus optional extra columns appended to the dense input.
ValueId conv_encoder(Tape& t, ValueId img, const std::string& prefix,
                     std::size_t side, const std::array<std::size_t, 3>& widths,
                     ValueId extra = -1);
// x [1, in] -> flattened image [1, side*side].
ValueId deconv_decoder(Tape& t, ValueId x, const std::string& prefix,
                       std::size_t side, const std::array<std::size_t, 3>& widths);

// mean over elements of the Gaussian negative log density; sigma must be
// positive (post-softplus). mu/sigma/target share a shape.
ValueId gaussian_nll(Tape& t, ValueId mu, ValueId sigma, ValueId target);

}  // namespace afford::nets
