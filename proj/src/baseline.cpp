#include "afford/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "afford/error.hpp"
#include "afford/nets.hpp"
#include "afford/tape.hpp"

namespace afford::baseline {

using data::AffordanceSample;
using data::ChannelKind;
using data::ChannelSpec;
using data::Dataset;
using nlohmann::json;
using num::Rng;
using num::Tape;
using num::Tensor;
using num::ValueId;

namespace {

std::string embed_prefix(const std::string& ch) { return "embed." + ch; }
std::string head_prefix(const std::string& ch) { return "head." + ch; }

void register_params(num::ParameterStore& ps, Rng& rng, const BaselineParameters& bp) {
  const auto& h = bp.hyper;
  const std::size_t t_in = bp.variant.with_time ? 1 : 0;
  for (const auto& c : bp.channels) {
    if (c.kind == ChannelKind::Trajectory)
      nets::add_mlp3(ps, rng, embed_prefix(c.name), c.dim + t_in, h.hidden_width, h.embed_dim);
    else
      nets::add_conv_encoder(ps, rng, embed_prefix(c.name), h.image_side, h.conv_widths, t_in,
                             h.embed_dim);
  }
  nets::add_dense(ps, rng, "trunk.l0", bp.channels.size() * h.embed_dim, h.hidden_width, false);
  nets::add_dense(ps, rng, "trunk.l1", h.hidden_width, h.hidden_width, false);
  const bool nll = bp.variant.loss == Loss::Nll;
  for (const auto& c : bp.channels) {
    if (c.kind == ChannelKind::Trajectory) {
      nets::add_dense(ps, rng, head_prefix(c.name), h.hidden_width, (nll ? 2 : 1) * c.dim, true);
    } else {
      nets::add_deconv_decoder(ps, rng, head_prefix(c.name), h.hidden_width, h.image_side,
                               h.conv_widths);
      if (nll) nets::add_dense(ps, rng, head_prefix(c.name) + ".sigma", h.hidden_width, 1, true);
    }
  }
}

struct StepOutputs {
  std::vector<ValueId> mu;     // per channel; -1 when unavailable
  std::vector<ValueId> sigma;  // NLL only; image sigma is [1,1]
};

// One forward pass: embed current states, apply the keep mask, concatenate,
// run the trunk, and emit per-channel next-step heads.
StepOutputs build_forward(Tape& t, const BaselineParameters& bp,
                          const std::vector<Tensor>& states, const Tensor* image, double tk,
                          const std::vector<bool>& present,
                          const std::vector<bool>& kept) {
  const auto& h = bp.hyper;
  const bool nll = bp.variant.loss == Loss::Nll;
  ValueId cat = -1;
  for (std::size_t i = 0; i < bp.channels.size(); ++i) {
    const auto& c = bp.channels[i];
    ValueId emb;
    if (!present[i] || !kept[i]) {
      emb = t.constant(Tensor({1, h.embed_dim}));
    } else if (c.kind == ChannelKind::Trajectory) {
      Tensor x({1, c.dim + (bp.variant.with_time ? std::size_t{1} : std::size_t{0})});
      for (std::size_t d = 0; d < c.dim; ++d) x.data[d] = states[i].data[d];
      if (bp.variant.with_time) x.data[c.dim] = tk;
      emb = nets::mlp3(t, t.constant(std::move(x)), embed_prefix(c.name));
    } else {
      const ValueId img = t.reshape(t.constant(*image), {1, h.image_side, h.image_side});
      ValueId extra = -1;
      if (bp.variant.with_time) extra = t.constant(Tensor({1, 1}, {tk}));
      emb = nets::conv_encoder(t, img, embed_prefix(c.name), h.image_side, h.conv_widths, extra);
    }
    cat = (cat < 0) ? emb : t.concat_cols(cat, emb);
  }
  ValueId trunk = t.relu(nets::dense(t, cat, "trunk.l0"));
  trunk = t.relu(nets::dense(t, trunk, "trunk.l1"));

  StepOutputs out;
  out.mu.assign(bp.channels.size(), -1);
  out.sigma.assign(bp.channels.size(), -1);
  for (std::size_t i = 0; i < bp.channels.size(); ++i) {
    const auto& c = bp.channels[i];
    if (!present[i]) continue;
    if (c.kind == ChannelKind::Trajectory) {
      const ValueId o = nets::dense(t, trunk, head_prefix(c.name));
      if (nll) {
        out.mu[i] = t.slice_cols(o, 0, c.dim);
        out.sigma[i] = t.affine(t.softplus(t.slice_cols(o, c.dim, 2 * c.dim)), 1.0, h.sigma_floor);
      } else {
        out.mu[i] = o;
      }
    } else {
      out.mu[i] = nets::deconv_decoder(t, trunk, head_prefix(c.name), h.image_side, h.conv_widths);
      if (nll) {
        const ValueId raw = nets::dense(t, trunk, head_prefix(c.name) + ".sigma");
        out.sigma[i] = t.affine(t.softplus(raw), 1.0, h.sigma_floor);
      }
    }
  }
  return out;
}

}  // namespace

std::string BaselineVariant::name() const {
  return std::string(loss == Loss::Nll ? "nll" : "mse") + (with_time ? "-with-time" : "-without-time");
}

BaselineVariant BaselineVariant::from_name(const std::string& s) {
  for (const auto& n : all_names())
    if (n == s) {
      BaselineVariant v;
      v.loss = s.rfind("nll", 0) == 0 ? Loss::Nll : Loss::Mse;
      v.with_time = s.find("-with-time") != std::string::npos;
      return v;
    }
  throw Error("unknown baseline variant: " + s +
              " (valid: nll-with-time, nll-without-time, mse-with-time, mse-without-time)");
}

const std::vector<std::string>& BaselineVariant::all_names() {
  static const std::vector<std::string> names{"nll-with-time", "nll-without-time",
                                              "mse-with-time", "mse-without-time"};
  return names;
}

BaselineParameters make_baseline(std::vector<ChannelSpec> channels, const BaselineHyper& hyper,
                                 BaselineVariant variant) {
  require(!channels.empty(), "baseline needs at least one channel");
  BaselineParameters bp;
  bp.hyper = hyper;
  bp.variant = variant;
  bp.channels = std::move(channels);
  std::set<std::string> names;
  for (const auto& c : bp.channels) {
    c.validate();
    require(names.insert(c.name).second, "duplicate channel: " + c.name);
    if (c.kind == ChannelKind::Trajectory)
      require(c.length == hyper.t_steps, "channel " + c.name + " length != baseline t_steps");
  }
  Rng zero(0);
  register_params(bp.params, zero, bp);
  for (const auto& n : bp.params.names()) {
    auto& t = bp.params.at(n);
    std::fill(t.data.begin(), t.data.end(), 0.0);
  }
  return bp;
}

BaselineParameters init_baseline(std::vector<ChannelSpec> channels, const BaselineHyper& hyper,
                                 BaselineVariant variant, std::uint64_t seed) {
  BaselineParameters bp = make_baseline(std::move(channels), hyper, variant);
  Rng rng(seed);
  num::ParameterStore fresh;
  register_params(fresh, rng, bp);
  for (const auto& n : fresh.names()) bp.params.at(n) = fresh.at(n);
  return bp;
}

void write_baseline(const BaselineParameters& bp, const std::string& path) {
  data::ArrayFile f;
  f.magic = "AFFB";
  json meta;
  meta["hyper"] = json{{"embed_dim", bp.hyper.embed_dim},
                       {"hidden_width", bp.hyper.hidden_width},
                       {"conv_widths", bp.hyper.conv_widths},
                       {"t_steps", bp.hyper.t_steps},
                       {"image_side", bp.hyper.image_side},
                       {"sigma_floor", bp.hyper.sigma_floor}};
  meta["variant"] = bp.variant.name();
  meta["channels"] = json::parse(data::channels_to_json_string(bp.channels));
  f.meta_json = meta.dump();
  for (const auto& name : bp.params.names()) f.arrays.emplace_back(name, bp.params.at(name));
  data::write_array_file(f, path);
}

BaselineParameters read_baseline(const std::string& path) {
  const data::ArrayFile f = data::read_array_file(path, "AFFB");
  const json meta = json::parse(f.meta_json);
  BaselineHyper h;
  const json& jh = meta.at("hyper");
  h.embed_dim = jh.at("embed_dim").get<std::size_t>();
  h.hidden_width = jh.at("hidden_width").get<std::size_t>();
  h.conv_widths = jh.at("conv_widths").get<std::array<std::size_t, 3>>();
  h.t_steps = jh.at("t_steps").get<std::size_t>();
  h.image_side = jh.at("image_side").get<std::size_t>();
  h.sigma_floor = jh.at("sigma_floor").get<double>();
  BaselineParameters bp = make_baseline(
      data::channels_from_json_string(meta.at("channels").dump()), h,
      BaselineVariant::from_name(meta.at("variant").get<std::string>()));
  std::set<std::string> filled;
  for (const auto& [name, tensor] : f.arrays) {
    require(bp.params.contains(name), "baseline file has unexpected array: " + name);
    Tensor& dst = bp.params.at(name);
    require(dst.shape == tensor.shape, "array " + name + " shape mismatch");
    dst = tensor;
    filled.insert(name);
  }
  for (const auto& name : bp.params.names())
    require(filled.count(name) != 0, "baseline file missing array: " + name);
  return bp;
}

StepDiagnostics baseline_train_step(BaselineParameters& bp, num::AdamOptimizer& opt,
                                    const AffordanceSample& sample, Rng& rng) {
  const auto& h = bp.hyper;
  const std::size_t T = h.t_steps;
  std::vector<bool> present(bp.channels.size(), false);
  std::size_t n_present = 0;
  for (std::size_t i = 0; i < bp.channels.size(); ++i) {
    present[i] = sample.available(i);
    n_present += present[i] ? 1 : 0;
  }
  require(n_present > 0, "baseline step: sample has no available channels");

  const auto k = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(T) - 2));
  // Representation dropout: each available embedding zeroed with prob 0.5,
  // redrawn until at least one is kept.
  std::vector<bool> kept(bp.channels.size(), false);
  while (true) {
    bool any = false;
    for (std::size_t i = 0; i < bp.channels.size(); ++i) {
      kept[i] = present[i] && !rng.coin();
      any = any || kept[i];
    }
    if (any) break;
  }

  const double tk = static_cast<double>(k) / static_cast<double>(T - 1);
  std::vector<Tensor> states(bp.channels.size());
  const Tensor* image = nullptr;
  std::size_t image_idx = 0;
  for (std::size_t i = 0; i < bp.channels.size(); ++i) {
    if (!present[i]) continue;
    const auto& c = bp.channels[i];
    if (c.kind == ChannelKind::Trajectory) {
      Tensor s({1, c.dim});
      for (std::size_t d = 0; d < c.dim; ++d) s.data[d] = sample.payload[i].at(k, d);
      states[i] = std::move(s);
    } else {
      image = &sample.payload[i];
      image_idx = i;
    }
  }

  Tape t(&bp.params);
  const StepOutputs out = build_forward(t, bp, states, image, tk, present, kept);

  const bool nll = bp.variant.loss == Loss::Nll;
  ValueId total = -1;
  std::size_t n_loss = 0;
  for (std::size_t i = 0; i < bp.channels.size(); ++i) {
    if (!present[i]) continue;
    const auto& c = bp.channels[i];
    ValueId channel_loss;
    if (c.kind == ChannelKind::Trajectory) {
      Tensor y({1, c.dim});
      for (std::size_t d = 0; d < c.dim; ++d) y.data[d] = sample.payload[i].at(k + 1, d);
      const ValueId yc = t.constant(std::move(y));
      channel_loss = nll ? nets::gaussian_nll(t, out.mu[i], out.sigma[i], yc)
                         : t.mean_all(t.square(t.sub(yc, out.mu[i])));
    } else {
      const std::size_t hw = c.height * c.width;
      const ValueId yc = t.constant(Tensor({std::size_t{1}, hw}, sample.payload[image_idx].data));
      channel_loss = nll ? nets::gaussian_nll(t, out.mu[i], t.repeat_cols(out.sigma[i], hw), yc)
                         : t.mean_all(t.square(t.sub(yc, out.mu[i])));
    }
    total = (total < 0) ? channel_loss : t.add(total, channel_loss);
    ++n_loss;
  }
  const ValueId loss = t.affine(total, 1.0 / static_cast<double>(n_loss), 0.0);

  StepDiagnostics diag;
  diag.loss = t.scalar(loss);
  opt.step(bp.params, t.backward(loss));
  for (std::size_t i = 0; i < bp.channels.size(); ++i)
    if (kept[i]) diag.kept.push_back(bp.channels[i].name);
  return diag;
}

std::vector<double> baseline_train(BaselineParameters& bp, const Dataset& ds,
                                   const BaselineTrainConfig& cfg) {
  require(ds.channels.size() == bp.channels.size(), "channel mismatch: count differs");
  for (std::size_t i = 0; i < ds.channels.size(); ++i)
    require(ds.channels[i] == bp.channels[i], "channel mismatch: " + ds.channels[i].name);
  require(cfg.iterations == 0 || !ds.samples.empty(), "baseline_train: empty dataset");
  num::AdamOptimizer opt(cfg.adam);
  Rng rng(cfg.seed);
  std::vector<double> losses;
  losses.reserve(static_cast<std::size_t>(cfg.iterations));
  for (std::int64_t step = 0; step < cfg.iterations; ++step) {
    const auto idx = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(ds.samples.size()) - 1));
    losses.push_back(baseline_train_step(bp, opt, ds.samples[idx], rng).loss);
  }
  return losses;
}

RolloutResult baseline_rollout(const BaselineParameters& bp,
                               const std::map<std::string, num::Tensor>& observed,
                               const Tensor* observed_image) {
  const auto& h = bp.hyper;
  const std::size_t T = h.t_steps;
  std::vector<bool> present(bp.channels.size(), true);
  std::vector<bool> kept(bp.channels.size(), true);  // no dropout at inference
  std::vector<bool> is_observed(bp.channels.size(), false);

  std::vector<Tensor> emitted(bp.channels.size());
  std::vector<Tensor> states(bp.channels.size());
  Tensor image_state({h.image_side, h.image_side});
  bool image_observed = false;
  std::size_t image_idx = bp.channels.size();

  for (std::size_t i = 0; i < bp.channels.size(); ++i) {
    const auto& c = bp.channels[i];
    if (c.kind == ChannelKind::Image) {
      image_idx = i;
      if (observed_image != nullptr) {
        require(observed_image->shape == image_state.shape, "rollout: image shape mismatch");
        image_state = *observed_image;
        image_observed = true;
        is_observed[i] = true;
      }
      continue;
    }
    emitted[i] = Tensor({T, c.dim});
    auto it = observed.find(c.name);
    if (it != observed.end()) {
      require(it->second.shape == emitted[i].shape, "rollout: trajectory shape mismatch");
      is_observed[i] = true;
      emitted[i] = it->second;
      states[i] = Tensor({1, c.dim});
      for (std::size_t d = 0; d < c.dim; ++d) states[i].data[d] = it->second.at(0, d);
    } else {
      states[i] = Tensor({1, c.dim});  // zero initial state
    }
  }

  Tensor predicted_image = image_state;
  for (std::size_t k = 0; k + 1 < T; ++k) {
    const double tk = static_cast<double>(k) / static_cast<double>(T - 1);
    Tape t(&bp.params);
    const StepOutputs out = build_forward(t, bp, states, &image_state, tk, present, kept);
    for (std::size_t i = 0; i < bp.channels.size(); ++i) {
      const auto& c = bp.channels[i];
      if (c.kind == ChannelKind::Image) {
        if (!image_observed && out.mu[i] >= 0)
          predicted_image = Tensor({h.image_side, h.image_side}, t.value(out.mu[i]).data);
        continue;
      }
      if (is_observed[i]) {
        for (std::size_t d = 0; d < c.dim; ++d) states[i].data[d] = emitted[i].at(k + 1, d);
      } else {
        const Tensor& mu = t.value(out.mu[i]);
        for (std::size_t d = 0; d < c.dim; ++d) {
          states[i].data[d] = mu.data[d];
          emitted[i].at(k + 1, d) = mu.data[d];
        }
      }
    }
  }

  RolloutResult res;
  for (std::size_t i = 0; i < bp.channels.size(); ++i)
    if (bp.channels[i].kind == ChannelKind::Trajectory)
      res.trajectories[bp.channels[i].name] = std::move(emitted[i]);
  res.image = std::move(predicted_image);
  return res;
}

}  // namespace afford::baseline
