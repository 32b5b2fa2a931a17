#include "afford/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "afford/error.hpp"
#include "afford/nets.hpp"

namespace afford::model {

using data::AffordanceSample;
using data::ChannelKind;
using data::ChannelSpec;
using data::Dataset;
using data::GenerationRequest;
using nlohmann::json;
using num::Rng;
using num::Tape;
using num::Tensor;
using num::ValueId;

namespace {

std::string enc_prefix(const std::string& ch) { return "enc." + ch; }
std::string dec_prefix(const std::string& ch) { return "dec." + ch; }

void register_channel(num::ParameterStore& ps, Rng& rng, const ChannelSpec& c,
                      const ModelHyper& h) {
  if (c.kind == ChannelKind::Trajectory) {
    nets::add_mlp3(ps, rng, enc_prefix(c.name), 1 + c.dim, h.hidden_width, h.latent_dim);
    nets::add_mlp3(ps, rng, dec_prefix(c.name), h.latent_dim + 1, h.hidden_width, 2 * c.dim);
  } else {
    nets::add_conv_encoder(ps, rng, enc_prefix(c.name), h.image_side, h.conv_widths, 0,
                           h.latent_dim);
    nets::add_deconv_decoder(ps, rng, dec_prefix(c.name), h.latent_dim, h.image_side,
                             h.conv_widths);
    nets::add_dense(ps, rng, dec_prefix(c.name) + ".sigma", h.latent_dim, 1, true);
  }
}

// Observation matrix: one row per condition point, columns (t, value...).
Tensor obs_matrix(const ChannelSpec& c, const std::vector<data::ConditionPoint>& points) {
  require(!points.empty(), "channel " + c.name + ": empty observation list");
  Tensor m({points.size(), 1 + c.dim});
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    require(p.t >= 0.0 && p.t <= 1.0, "channel " + c.name + ": observation time out of [0,1]");
    require(p.value.size() == c.dim, "channel " + c.name + ": observation width mismatch");
    m.at(i, 0) = p.t;
    for (std::size_t d = 0; d < c.dim; ++d) m.at(i, 1 + d) = p.value[d];
  }
  return m;
}

Tensor obs_matrix_from_rows(const ChannelSpec& c, const Tensor& payload,
                            const std::vector<std::size_t>& rows) {
  Tensor m({rows.size(), 1 + c.dim});
  const double denom = static_cast<double>(c.length - 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    m.at(i, 0) = static_cast<double>(rows[i]) / denom;
    for (std::size_t d = 0; d < c.dim; ++d) m.at(i, 1 + d) = payload.at(rows[i], d);
  }
  return m;
}

ValueId encode_on_tape(Tape& t, const ModelParameters& mp, const ChannelSpec& c,
                       const Tensor& data) {
  if (c.kind == ChannelKind::Trajectory) {
    const ValueId rows = nets::mlp3(t, t.constant(data), enc_prefix(c.name));
    return t.mean_rows(rows);  // average of per-observation latents
  }
  require(data.shape == std::vector<std::size_t>{mp.hyper.image_side, mp.hyper.image_side},
          "channel " + c.name + ": image shape mismatch");
  const ValueId img = t.reshape(t.constant(data), {1, mp.hyper.image_side, mp.hyper.image_side});
  return nets::conv_encoder(t, img, enc_prefix(c.name), mp.hyper.image_side,
                            mp.hyper.conv_widths);
}

ValueId blend_on_tape(Tape& t, const std::vector<ValueId>& latents,
                      const std::vector<double>& weights) {
  require(latents.size() == weights.size() && !latents.empty(), "blend: size mismatch");
  double sum = 0.0;
  for (double w : weights) {
    require(w >= 0.0 && w <= 1.0 + 1e-9, "blend: weight outside [0,1]");
    sum += w;
  }
  require(std::fabs(sum - 1.0) <= 1e-9, "blend: weights violate simplex constraint");
  std::vector<std::pair<ValueId, double>> active;
  for (std::size_t i = 0; i < latents.size(); ++i)
    if (weights[i] != 0.0) active.emplace_back(latents[i], weights[i]);
  require(!active.empty(), "blend: all weights zero");
  if (active.size() == 1 && active[0].second == 1.0) return active[0].first;
  ValueId acc = t.affine(active[0].first, active[0].second, 0.0);
  for (std::size_t i = 1; i < active.size(); ++i)
    acc = t.add(acc, t.affine(active[i].first, active[i].second, 0.0));
  return acc;
}

struct DecodedChannel {
  ValueId mu;
  ValueId sigma;  // trajectory: [n,dim]; image: [1,1]
};

DecodedChannel decode_traj_on_tape(Tape& t, const ModelParameters& mp, const ChannelSpec& c,
                                   ValueId latent, const std::vector<double>& times) {
  require(!times.empty(), "channel " + c.name + ": no target times");
  Tensor tcol({times.size(), 1});
  for (std::size_t i = 0; i < times.size(); ++i) {
    require(times[i] >= 0.0 && times[i] <= 1.0, "channel " + c.name + ": target time out of [0,1]");
    tcol.at(i, 0) = times[i];
  }
  const ValueId rep = times.size() == 1 ? latent : t.repeat_rows(latent, times.size());
  const ValueId x = t.concat_cols(rep, t.constant(std::move(tcol)));
  const ValueId out = nets::mlp3(t, x, dec_prefix(c.name));
  const ValueId mu = t.slice_cols(out, 0, c.dim);
  const ValueId raw = t.slice_cols(out, c.dim, 2 * c.dim);
  const ValueId sigma = t.affine(t.softplus(raw), 1.0, mp.hyper.sigma_floor);
  return {mu, sigma};
}

DecodedChannel decode_image_on_tape(Tape& t, const ModelParameters& mp, const ChannelSpec& c,
                                    ValueId latent) {
  const ValueId mu = nets::deconv_decoder(t, latent, dec_prefix(c.name), mp.hyper.image_side,
                                          mp.hyper.conv_widths);
  const ValueId raw = nets::dense(t, latent, dec_prefix(c.name) + ".sigma");
  const ValueId sigma = t.affine(t.softplus(raw), 1.0, mp.hyper.sigma_floor);
  return {mu, sigma};
}

// All random draws of one training step, materialized up front so the same
// graph can be rebuilt for gradient checking.
struct StepPlan {
  std::vector<std::size_t> subset;    // channel indices feeding the blend
  std::vector<double> weights;        // aligned with subset
  std::vector<std::vector<std::size_t>> obs_rows;  // aligned with subset
  std::vector<std::size_t> decoded;   // all available channel indices
  std::vector<std::vector<std::size_t>> target_rows;  // aligned with decoded
};

StepPlan make_step_plan(const std::vector<ChannelSpec>& channels, const AffordanceSample& sample,
                        Rng& rng) {
  std::vector<std::size_t> avail;
  for (std::size_t i = 0; i < channels.size(); ++i)
    if (sample.available(i)) avail.push_back(i);
  require(!avail.empty(), "train step: sample has no available channels");

  StepPlan plan;
  // Channel dropout: half the time the full available set, otherwise a
  // uniformly random nonempty subset.
  if (rng.coin()) {
    plan.subset = avail;
  } else {
    const auto bits = static_cast<std::uint64_t>(
        rng.uniform_int(1, (std::int64_t{1} << avail.size()) - 1));
    for (std::size_t i = 0; i < avail.size(); ++i)
      if (bits & (std::uint64_t{1} << i)) plan.subset.push_back(avail[i]);
  }
  plan.weights = hierarchical_weights(channels, plan.subset, &rng);

  for (std::size_t idx : plan.subset) {
    const auto& c = channels[idx];
    std::vector<std::size_t> rows;
    if (c.kind == ChannelKind::Trajectory) {
      const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 10));
      for (std::size_t k = 0; k < n; ++k)
        rows.push_back(static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(c.length) - 1)));
    }
    plan.obs_rows.push_back(std::move(rows));
  }

  plan.decoded = avail;
  for (std::size_t idx : plan.decoded) {
    const auto& c = channels[idx];
    std::vector<std::size_t> rows;
    if (c.kind == ChannelKind::Trajectory)
      for (std::size_t k = 0; k < 10; ++k)
        rows.push_back(static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(c.length) - 1)));
    plan.target_rows.push_back(std::move(rows));
  }
  return plan;
}

ValueId build_step_loss(Tape& t, const ModelParameters& mp, const AffordanceSample& sample,
                        const StepPlan& plan) {
  std::vector<ValueId> latents;
  for (std::size_t i = 0; i < plan.subset.size(); ++i) {
    const std::size_t idx = plan.subset[i];
    const auto& c = mp.channels[idx];
    if (c.kind == ChannelKind::Trajectory) {
      latents.push_back(encode_on_tape(t, mp, c, obs_matrix_from_rows(c, sample.payload[idx],
                                                                      plan.obs_rows[i])));
    } else {
      latents.push_back(encode_on_tape(t, mp, c, sample.payload[idx]));
    }
  }
  const ValueId lf = blend_on_tape(t, latents, plan.weights);

  ValueId total = -1;
  for (std::size_t i = 0; i < plan.decoded.size(); ++i) {
    const std::size_t idx = plan.decoded[i];
    const auto& c = mp.channels[idx];
    ValueId channel_loss;
    if (c.kind == ChannelKind::Trajectory) {
      const auto& rows = plan.target_rows[i];
      std::vector<double> times(rows.size());
      Tensor y({rows.size(), c.dim});
      for (std::size_t k = 0; k < rows.size(); ++k) {
        times[k] = static_cast<double>(rows[k]) / static_cast<double>(c.length - 1);
        for (std::size_t d = 0; d < c.dim; ++d) y.at(k, d) = sample.payload[idx].at(rows[k], d);
      }
      const DecodedChannel dec = decode_traj_on_tape(t, mp, c, lf, times);
      channel_loss = nets::gaussian_nll(t, dec.mu, dec.sigma, t.constant(std::move(y)));
    } else {
      const DecodedChannel dec = decode_image_on_tape(t, mp, c, lf);
      const std::size_t hw = c.height * c.width;
      Tensor y({std::size_t{1}, hw}, sample.payload[idx].data);
      const ValueId sigma = t.repeat_cols(dec.sigma, hw);
      channel_loss = nets::gaussian_nll(t, dec.mu, sigma, t.constant(std::move(y)));
    }
    total = (total < 0) ? channel_loss : t.add(total, channel_loss);
  }
  // Channels contribute with equal weight.
  return t.affine(total, 1.0 / static_cast<double>(plan.decoded.size()), 0.0);
}

}  // namespace

const ChannelSpec& ModelParameters::channel(const std::string& name) const {
  for (const auto& c : channels)
    if (c.name == name) return c;
  throw Error("model does not declare channel: " + name);
}

bool ModelParameters::has_channel(const std::string& name) const {
  for (const auto& c : channels)
    if (c.name == name) return true;
  return false;
}

ModelParameters make_model(std::vector<ChannelSpec> channels, const ModelHyper& hyper) {
  require(!channels.empty(), "model needs at least one channel");
  require(hyper.latent_dim >= 1 && hyper.hidden_width >= 1, "bad hyperparameters");
  require(hyper.image_side % 8 == 0, "image side must be divisible by 8");
  ModelParameters mp;
  mp.hyper = hyper;
  mp.channels = std::move(channels);
  Rng zero(0);
  std::set<std::string> names;
  for (const auto& c : mp.channels) {
    c.validate();
    require(names.insert(c.name).second, "duplicate channel: " + c.name);
    if (c.kind == ChannelKind::Trajectory)
      require(c.length == hyper.t_steps, "channel " + c.name + " length != model t_steps");
    else
      require(c.height == hyper.image_side && c.width == hyper.image_side,
              "channel " + c.name + " extents != model image side");
    register_channel(mp.params, zero, c, hyper);
  }
  // make_model registers shapes only; zero everything out again.
  for (const auto& n : mp.params.names()) {
    auto& t = mp.params.at(n);
    std::fill(t.data.begin(), t.data.end(), 0.0);
  }
  return mp;
}

ModelParameters init_model(std::vector<ChannelSpec> channels, const ModelHyper& hyper,
                           std::uint64_t seed) {
  ModelParameters mp = make_model(std::move(channels), hyper);
  Rng rng(seed);
  num::ParameterStore fresh;
  for (const auto& c : mp.channels) register_channel(fresh, rng, c, hyper);
  for (const auto& n : fresh.names()) mp.params.at(n) = fresh.at(n);
  return mp;
}

void write_model(const ModelParameters& mp, const std::string& path) {
  data::ArrayFile f;
  f.magic = "AFFM";
  json meta;
  meta["hyper"] = json{{"latent_dim", mp.hyper.latent_dim},
                       {"hidden_width", mp.hyper.hidden_width},
                       {"conv_widths", mp.hyper.conv_widths},
                       {"t_steps", mp.hyper.t_steps},
                       {"image_side", mp.hyper.image_side},
                       {"sigma_floor", mp.hyper.sigma_floor}};
  meta["channels"] = json::parse(data::channels_to_json_string(mp.channels));
  f.meta_json = meta.dump();
  for (const auto& name : mp.params.names()) f.arrays.emplace_back(name, mp.params.at(name));
  data::write_array_file(f, path);
}

ModelParameters read_model(const std::string& path) {
  const data::ArrayFile f = data::read_array_file(path, "AFFM");
  const json meta = json::parse(f.meta_json);
  ModelHyper h;
  const json& jh = meta.at("hyper");
  h.latent_dim = jh.at("latent_dim").get<std::size_t>();
  h.hidden_width = jh.at("hidden_width").get<std::size_t>();
  h.conv_widths = jh.at("conv_widths").get<std::array<std::size_t, 3>>();
  h.t_steps = jh.at("t_steps").get<std::size_t>();
  h.image_side = jh.at("image_side").get<std::size_t>();
  h.sigma_floor = jh.at("sigma_floor").get<double>();
  ModelParameters mp = make_model(data::channels_from_json_string(meta.at("channels").dump()), h);

  std::set<std::string> filled;
  for (const auto& [name, tensor] : f.arrays) {
    require(mp.params.contains(name), "model file has unexpected array: " + name);
    Tensor& dst = mp.params.at(name);
    require(dst.shape == tensor.shape, "array " + name + " shape mismatch against hyperparameters");
    dst = tensor;
    filled.insert(name);
  }
  for (const auto& name : mp.params.names())
    require(filled.count(name) != 0, "model file missing array: " + name);
  return mp;
}

Tensor encode_channel(const ModelParameters& mp, const std::string& channel,
                      const std::vector<data::ConditionPoint>& observations) {
  const ChannelSpec& c = mp.channel(channel);
  require(c.kind == ChannelKind::Trajectory, "channel " + channel + " expects an image");
  Tape t(&mp.params);
  const ValueId lat = encode_on_tape(t, mp, c, obs_matrix(c, observations));
  Tensor out({mp.hyper.latent_dim});
  out.data = t.value(lat).data;
  return out;
}

Tensor encode_channel(const ModelParameters& mp, const std::string& channel,
                      const Tensor& image) {
  const ChannelSpec& c = mp.channel(channel);
  require(c.kind == ChannelKind::Image, "channel " + channel + " expects observations");
  Tape t(&mp.params);
  const ValueId lat = encode_on_tape(t, mp, c, image);
  Tensor out({mp.hyper.latent_dim});
  out.data = t.value(lat).data;
  return out;
}

Tensor blend_latents(const std::vector<const Tensor*>& latents,
                     const std::vector<double>& weights) {
  require(latents.size() == weights.size() && !latents.empty(), "blend: size mismatch");
  double sum = 0.0;
  std::size_t dim = 0;
  for (std::size_t i = 0; i < latents.size(); ++i) {
    require(weights[i] >= 0.0 && weights[i] <= 1.0 + 1e-9, "blend: weight outside [0,1]");
    sum += weights[i];
    if (latents[i] == nullptr) {
      require(weights[i] == 0.0, "blend: nonzero weight on missing channel");
      continue;
    }
    if (dim == 0) dim = latents[i]->numel();
    require(latents[i]->numel() == dim, "blend: latent dimension mismatch");
  }
  require(std::fabs(sum - 1.0) <= 1e-9, "blend: weights violate simplex constraint");
  require(dim > 0, "blend: no latents present");

  // One-hot weights return the selected latent bitwise.
  for (std::size_t i = 0; i < latents.size(); ++i)
    if (weights[i] == 1.0 && latents[i] != nullptr) return *latents[i];

  std::vector<std::size_t> shape{dim};
  for (const Tensor* l : latents)
    if (l != nullptr) { shape = l->shape; break; }
  Tensor out(shape);
  for (std::size_t i = 0; i < latents.size(); ++i) {
    if (weights[i] == 0.0 || latents[i] == nullptr) continue;
    for (std::size_t j = 0; j < dim; ++j) out.data[j] += weights[i] * latents[i]->data[j];
  }
  return out;
}

std::vector<double> hierarchical_weights(const std::vector<ChannelSpec>& channels,
                                         const std::vector<std::size_t>& subset,
                                         Rng* rng) {
  require(!subset.empty(), "weights: empty channel subset");
  std::vector<std::size_t> agent_pos;  // positions within subset
  std::vector<std::size_t> single_pos;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    require(subset[i] < channels.size(), "weights: bad channel index");
    if (channels[subset[i]].is_action())
      agent_pos.push_back(i);
    else
      single_pos.push_back(i);
  }
  // Agents combine inside the action modality first, then modalities.
  std::vector<double> agent_w;
  if (!agent_pos.empty())
    agent_w = rng ? rng->dirichlet(agent_pos.size())
                  : std::vector<double>(agent_pos.size(), 1.0 / static_cast<double>(agent_pos.size()));
  const std::size_t n_mod = (agent_pos.empty() ? 0 : 1) + single_pos.size();
  std::vector<double> mod_w = rng ? rng->dirichlet(n_mod)
                                  : std::vector<double>(n_mod, 1.0 / static_cast<double>(n_mod));

  std::vector<double> out(subset.size(), 0.0);
  std::size_t mod = 0;
  if (!agent_pos.empty()) {
    for (std::size_t a = 0; a < agent_pos.size(); ++a)
      out[agent_pos[a]] = mod_w[0] * agent_w[a];
    mod = 1;
  }
  for (std::size_t s = 0; s < single_pos.size(); ++s) out[single_pos[s]] = mod_w[mod + s];
  return out;
}

ChannelPrediction decode_channel(const ModelParameters& mp, const std::string& channel,
                                 const Tensor& latent, const std::vector<double>& times) {
  const ChannelSpec& c = mp.channel(channel);
  require(latent.numel() == mp.hyper.latent_dim, "decode: latent dimension mismatch");
  Tape t(&mp.params);
  const ValueId lat = t.constant(Tensor({1, mp.hyper.latent_dim}, latent.data));
  ChannelPrediction pred;
  if (c.kind == ChannelKind::Trajectory) {
    const DecodedChannel dec = decode_traj_on_tape(t, mp, c, lat, times);
    pred.mu = Tensor({times.size(), c.dim}, t.value(dec.mu).data);
    pred.sigma = Tensor({times.size(), c.dim}, t.value(dec.sigma).data);
  } else {
    const DecodedChannel dec = decode_image_on_tape(t, mp, c, lat);
    pred.mu = Tensor({c.height, c.width}, t.value(dec.mu).data);
    pred.sigma = Tensor({std::size_t{1}}, t.value(dec.sigma).data);
  }
  return pred;
}

TrainStepResult train_step(ModelParameters& mp, num::AdamOptimizer& opt,
                           const AffordanceSample& sample, Rng& rng) {
  const StepPlan plan = make_step_plan(mp.channels, sample, rng);
  Tape t(&mp.params);
  const ValueId loss = build_step_loss(t, mp, sample, plan);
  TrainStepResult res;
  res.loss = t.scalar(loss);
  const num::GradientMap grads = t.backward(loss);
  opt.step(mp.params, grads);
  for (std::size_t i : plan.subset) res.selected.push_back(mp.channels[i].name);
  for (std::size_t i : plan.decoded) res.decoded.push_back(mp.channels[i].name);
  return res;
}

void check_dataset_compatible(const ModelParameters& mp, const Dataset& ds) {
  require(ds.channels.size() == mp.channels.size(), "channel mismatch: count differs");
  for (std::size_t i = 0; i < ds.channels.size(); ++i)
    require(ds.channels[i] == mp.channels[i],
            "channel mismatch at index " + std::to_string(i) + " (" + ds.channels[i].name + ")");
}

std::vector<double> train(ModelParameters& mp, const Dataset& ds, const TrainConfig& cfg,
                          const SnapshotFn& snapshot) {
  check_dataset_compatible(mp, ds);
  require(cfg.iterations >= 0, "train: negative iteration count");
  require(cfg.iterations == 0 || !ds.samples.empty(), "train: empty dataset");
  num::AdamOptimizer opt(cfg.adam);
  Rng rng(cfg.seed);
  std::vector<double> losses;
  losses.reserve(static_cast<std::size_t>(cfg.iterations));
  for (std::int64_t step = 1; step <= cfg.iterations; ++step) {
    const auto idx = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(ds.samples.size()) - 1));
    losses.push_back(train_step(mp, opt, ds.samples[idx], rng).loss);
    if (snapshot && cfg.snapshot_every > 0 && step % cfg.snapshot_every == 0) snapshot(step, mp);
  }
  return losses;
}

std::vector<double> continue_training(ModelParameters& mp, const Dataset& old_ds,
                                      const Dataset& new_ds, const TrainConfig& cfg,
                                      const SnapshotFn& snapshot) {
  check_dataset_compatible(mp, old_ds);
  check_dataset_compatible(mp, new_ds);
  require(cfg.iterations == 0 || !old_ds.samples.empty() || !new_ds.samples.empty(),
          "continue_training: both pools empty");
  num::AdamOptimizer opt(cfg.adam);
  Rng rng(cfg.seed);
  std::vector<double> losses;
  losses.reserve(static_cast<std::size_t>(cfg.iterations));
  for (std::int64_t step = 1; step <= cfg.iterations; ++step) {
    const Dataset* pool;
    if (old_ds.samples.empty())
      pool = &new_ds;
    else if (new_ds.samples.empty())
      pool = &old_ds;
    else
      pool = rng.coin() ? &old_ds : &new_ds;  // 1:1 replay ratio
    const auto idx = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(pool->samples.size()) - 1));
    losses.push_back(train_step(mp, opt, pool->samples[idx], rng).loss);
    if (snapshot && cfg.snapshot_every > 0 && step % cfg.snapshot_every == 0) snapshot(step, mp);
  }
  return losses;
}

Predictions generate(const ModelParameters& mp, const GenerationRequest& request) {
  require(!request.observed.empty(), "generate: no observed channels");
  require(!request.outputs.empty(), "generate: no requested outputs");

  // Encode in declared channel order so blending order is stable.
  std::vector<std::pair<std::size_t, const data::ObservedChannel*>> observed;
  for (const auto& oc : request.observed) {
    const ChannelSpec& c = mp.channel(oc.name);  // throws on undeclared channel
    std::size_t idx = 0;
    while (mp.channels[idx].name != c.name) ++idx;
    for (const auto& [other, ptr] : observed)
      require(other != idx, "generate: duplicate observed channel " + oc.name);
    observed.emplace_back(idx, &oc);
  }
  std::sort(observed.begin(), observed.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  Tape t(&mp.params);
  std::vector<ValueId> latents;
  std::vector<std::size_t> subset;
  for (const auto& [idx, oc] : observed) {
    const ChannelSpec& c = mp.channels[idx];
    if (c.kind == ChannelKind::Trajectory) {
      latents.push_back(encode_on_tape(t, mp, c, obs_matrix(c, oc->points)));
    } else {
      latents.push_back(encode_on_tape(t, mp, c, oc->image));
    }
    subset.push_back(idx);
  }
  const std::vector<double> weights = hierarchical_weights(mp.channels, subset, nullptr);
  const ValueId lf = blend_on_tape(t, latents, weights);

  std::vector<double> times = request.times.empty() ? data::time_grid(mp.hyper.t_steps)
                                                    : request.times;
  Predictions out;
  for (const auto& name : request.outputs) {
    const ChannelSpec& c = mp.channel(name);
    ChannelPrediction pred;
    if (c.kind == ChannelKind::Trajectory) {
      const DecodedChannel dec = decode_traj_on_tape(t, mp, c, lf, times);
      pred.mu = Tensor({times.size(), c.dim}, t.value(dec.mu).data);
      pred.sigma = Tensor({times.size(), c.dim}, t.value(dec.sigma).data);
    } else {
      const DecodedChannel dec = decode_image_on_tape(t, mp, c, lf);
      pred.mu = Tensor({c.height, c.width}, t.value(dec.mu).data);
      pred.sigma = Tensor({std::size_t{1}}, t.value(dec.sigma).data);
    }
    out[name] = std::move(pred);
  }
  return out;
}

num::LossBuilder train_loss_builder(const ModelParameters& mp, const AffordanceSample& sample,
                                    std::uint64_t seed) {
  Rng plan_rng(seed);
  const StepPlan plan = make_step_plan(mp.channels, sample, plan_rng);
  return [&mp, &sample, plan](Tape& t) { return build_step_loss(t, mp, sample, plan); };
}

}  // namespace afford::model
