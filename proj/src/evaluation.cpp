#include "afford/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "afford/error.hpp"

namespace afford::eval {

using data::AffordanceSample;
using data::ChannelKind;
using data::ChannelSpec;
using data::Dataset;
using nlohmann::json;
using num::Tensor;

namespace {

std::string join_plus(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) {
    if (!out.empty()) out += '+';
    out += n;
  }
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), "cannot write file: " + path);
  return out;
}

}  // namespace

std::vector<InputConfiguration> all_configurations(const std::vector<ChannelSpec>& channels) {
  require(!channels.empty() && channels.size() <= 16, "configurations: bad channel count");
  std::vector<InputConfiguration> out;
  const std::size_t total = (std::size_t{1} << channels.size()) - 1;
  for (std::size_t bits = 1; bits <= total; ++bits) {
    InputConfiguration cfg;
    for (std::size_t i = 0; i < channels.size(); ++i)
      if (bits & (std::size_t{1} << i)) cfg.channels.push_back(channels[i].name);
    cfg.name = join_plus(cfg.channels);
    out.push_back(std::move(cfg));
  }
  // Largest (full) configurations first, matching the table layout.
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.channels.size() > b.channels.size();
  });
  return out;
}

InputConfiguration parse_configuration(const std::string& spec) {
  InputConfiguration cfg;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, '+'))
    if (!item.empty()) cfg.channels.push_back(item);
  require(!cfg.channels.empty(), "empty input configuration: '" + spec + "'");
  cfg.name = join_plus(cfg.channels);
  return cfg;
}

const ReportRow* EvaluationReport::find(const std::string& config,
                                        const std::string& channel) const {
  for (const auto& r : rows)
    if (r.config == config && r.channel == channel) return &r;
  return nullptr;
}

GenerateFn model_generator(const model::ModelParameters& mp) {
  return [&mp](const AffordanceSample& sample, const std::vector<std::string>& observed) {
    data::GenerationRequest req;
    const std::vector<double> grid = data::time_grid(mp.hyper.t_steps);
    for (const auto& name : observed) {
      const ChannelSpec& c = mp.channel(name);
      std::size_t idx = 0;
      while (mp.channels[idx].name != name) ++idx;
      require(sample.available(idx), "sample does not provide channel " + name);
      data::ObservedChannel oc;
      oc.name = name;
      if (c.kind == ChannelKind::Trajectory) {
        for (std::size_t i = 0; i < c.length; ++i) {
          data::ConditionPoint p;
          p.t = grid[i];
          p.value.resize(c.dim);
          for (std::size_t d = 0; d < c.dim; ++d) p.value[d] = sample.payload[idx].at(i, d);
          oc.points.push_back(std::move(p));
        }
      } else {
        oc.image = sample.payload[idx];
      }
      req.observed.push_back(std::move(oc));
    }
    for (const auto& c : mp.channels) req.outputs.push_back(c.name);
    return model::generate(mp, req);
  };
}

GenerateFn oracle_generator(const std::vector<ChannelSpec>& channels, double sigma) {
  return [channels, sigma](const AffordanceSample& sample,
                           const std::vector<std::string>&) {
    model::Predictions out;
    for (std::size_t i = 0; i < channels.size(); ++i) {
      if (!sample.available(i)) continue;
      model::ChannelPrediction pred;
      pred.mu = sample.payload[i];
      if (channels[i].kind == ChannelKind::Trajectory)
        pred.sigma = Tensor::full(sample.payload[i].shape, sigma);
      else
        pred.sigma = Tensor({std::size_t{1}}, {sigma});
      out[channels[i].name] = std::move(pred);
    }
    return out;
  };
}

EvaluationReport rms_table(const Dataset& ds, const std::vector<InputConfiguration>& configs,
                           const GenerateFn& generate) {
  EvaluationReport report;
  for (const auto& cfg : configs) {
    std::vector<std::size_t> cfg_idx;
    for (const auto& name : cfg.channels) cfg_idx.push_back(ds.channel_index(name));

    struct Acc {
      double rms_sum = 0.0, sigma_sum = 0.0;
      std::size_t count = 0;
    };
    std::map<std::string, Acc> acc;

    for (const auto& sample : ds.samples) {
      bool usable = true;
      for (std::size_t idx : cfg_idx) usable = usable && sample.available(idx);
      if (!usable) continue;
      const model::Predictions preds = generate(sample, cfg.channels);
      for (std::size_t i = 0; i < ds.channels.size(); ++i) {
        if (!sample.available(i)) continue;
        const auto it = preds.find(ds.channels[i].name);
        if (it == preds.end()) continue;
        const Tensor& mu = it->second.mu;
        const Tensor& truth = sample.payload[i];
        require(mu.shape == truth.shape, "prediction shape mismatch on " + ds.channels[i].name);
        double se = 0.0;
        for (std::size_t k = 0; k < mu.numel(); ++k) {
          const double d = mu.data[k] - truth.data[k];
          se += d * d;
        }
        const Tensor& sg = it->second.sigma;
        double ssum = 0.0;
        for (double v : sg.data) ssum += v;
        Acc& a = acc[ds.channels[i].name];
        a.rms_sum += std::sqrt(se / static_cast<double>(mu.numel()));
        a.sigma_sum += ssum / static_cast<double>(sg.numel());
        a.count += 1;
      }
    }
    for (const auto& c : ds.channels) {
      const auto it = acc.find(c.name);
      if (it == acc.end()) continue;
      ReportRow row;
      row.config = cfg.name;
      row.channel = c.name;
      row.units = c.units;
      row.samples = it->second.count;
      row.rms = it->second.rms_sum / static_cast<double>(it->second.count);
      row.mean_sigma = it->second.sigma_sum / static_cast<double>(it->second.count);
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

EvaluationReport ambiguity_scores(const Dataset& ds,
                                  const std::vector<InputConfiguration>& configs,
                                  const GenerateFn& generate) {
  return rms_table(ds, configs, generate);
}

void write_report_csv(const EvaluationReport& report, const std::string& path) {
  auto out = open_out(path);
  out << "config,channel,units,rms,mean_sigma,samples\n";
  out.precision(12);
  for (const auto& r : report.rows)
    out << r.config << ',' << r.channel << ',' << r.units << ',' << r.rms << ','
        << r.mean_sigma << ',' << r.samples << '\n';
  require(out.good(), "write failed: " + path);
}

void write_report_json(const EvaluationReport& report, const std::string& path) {
  json j = json::array();
  for (const auto& r : report.rows)
    j.push_back(json{{"config", r.config}, {"channel", r.channel}, {"units", r.units},
                     {"rms", r.rms}, {"mean_sigma", r.mean_sigma}, {"samples", r.samples}});
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  require(out.good(), "write failed: " + path);
}

double mean_curvature(const Tensor& image) {
  require(image.ndim() == 2, "curvature: need [H,W] image");
  const std::size_t h = image.shape[0], w = image.shape[1];
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t y = 1; y + 1 < h; ++y)
    for (std::size_t x = 1; x + 1 < w; ++x) {
      if (std::fabs(image.at(y, x) - 0.5) <= 0.05) continue;  // background
      const double lap = image.at(y + 1, x) + image.at(y - 1, x) + image.at(y, x + 1) +
                         image.at(y, x - 1) - 4.0 * image.at(y, x);
      sum += std::fabs(lap);
      ++count;
    }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

namespace {

// Cyclic Jacobi eigensolver for a symmetric matrix; deterministic.
void jacobi_eigen(std::vector<double>& a, std::size_t d, std::vector<double>& evals,
                  std::vector<double>& evecs) {
  evecs.assign(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) evecs[i * d + i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = p + 1; q < d; ++q) off += a[p * d + q] * a[p * d + q];
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = p + 1; q < d; ++q) {
        const double apq = a[p * d + q];
        if (std::fabs(apq) < 1e-300) continue;
        const double theta = (a[q * d + q] - a[p * d + p]) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < d; ++k) {
          const double akp = a[k * d + p], akq = a[k * d + q];
          a[k * d + p] = c * akp - s * akq;
          a[k * d + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double apk = a[p * d + k], aqk = a[q * d + k];
          a[p * d + k] = c * apk - s * aqk;
          a[q * d + k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double vkp = evecs[k * d + p], vkq = evecs[k * d + q];
          evecs[k * d + p] = c * vkp - s * vkq;
          evecs[k * d + q] = s * vkp + c * vkq;
        }
      }
  }
  evals.assign(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) evals[i] = a[i * d + i];
}

}  // namespace

Pca2d pca_2d(const std::vector<std::vector<double>>& rows) {
  require(!rows.empty(), "pca: no rows");
  const std::size_t n = rows.size();
  const std::size_t d = rows[0].size();
  require(d >= 1, "pca: empty rows");
  for (const auto& r : rows) require(r.size() == d, "pca: ragged rows");

  std::vector<double> mean(d, 0.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
  for (auto& m : mean) m /= static_cast<double>(n);

  double total_var = 0.0;
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = r[j] - mean[j];
      total_var += c * c;
    }

  Pca2d out;
  out.points.assign(n, {0.0, 0.0});
  if (total_var <= 1e-24 || n < 2) {
    out.degenerate = true;
    return out;
  }

  std::vector<double> cov(d * d, 0.0);
  for (const auto& r : rows)
    for (std::size_t i = 0; i < d; ++i) {
      const double ci = r[i] - mean[i];
      for (std::size_t j = i; j < d; ++j) cov[i * d + j] += ci * (r[j] - mean[j]);
    }
  const double inv = 1.0 / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      cov[i * d + j] *= inv;
      cov[j * d + i] = cov[i * d + j];
    }

  std::vector<double> evals, evecs;
  jacobi_eigen(cov, d, evals, evecs);

  // Top two eigenpairs, deterministic sign (largest-magnitude entry positive).
  std::vector<std::size_t> order(d);
  for (std::size_t i = 0; i < d; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return evals[a] > evals[b]; });
  std::array<std::vector<double>, 2> pc;
  for (int k = 0; k < 2; ++k) {
    pc[k].assign(d, 0.0);
    if (static_cast<std::size_t>(k) >= d) continue;
    const std::size_t col = order[static_cast<std::size_t>(k)];
    double best = 0.0;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < d; ++i) {
      pc[k][i] = evecs[i * d + col];
      if (std::fabs(pc[k][i]) > best) {
        best = std::fabs(pc[k][i]);
        best_i = i;
      }
    }
    if (pc[k][best_i] < 0.0)
      for (auto& v : pc[k]) v = -v;
  }

  for (std::size_t r = 0; r < n; ++r)
    for (int k = 0; k < 2; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += (rows[r][j] - mean[j]) * pc[k][j];
      out.points[r][static_cast<std::size_t>(k)] = acc;
    }
  return out;
}

std::vector<std::pair<std::string, std::vector<double>>> object_latents(
    const model::ModelParameters& mp, const Dataset& ds) {
  model::check_dataset_compatible(mp, ds);
  std::vector<std::pair<std::string, std::vector<double>>> out;
  const std::vector<double> grid = data::time_grid(mp.hyper.t_steps);
  for (const auto& label : ds.labels()) {
    const AffordanceSample* sample = nullptr;
    for (const auto& s : ds.samples)
      if (s.meta.label == label) { sample = &s; break; }

    std::vector<Tensor> latents;
    std::vector<std::size_t> subset;
    for (std::size_t i = 0; i < mp.channels.size(); ++i) {
      if (!sample->available(i)) continue;
      const ChannelSpec& c = mp.channels[i];
      if (c.kind == ChannelKind::Trajectory) {
        std::vector<data::ConditionPoint> points(c.length);
        for (std::size_t k = 0; k < c.length; ++k) {
          points[k].t = grid[k];
          points[k].value.resize(c.dim);
          for (std::size_t d = 0; d < c.dim; ++d) points[k].value[d] = sample->payload[i].at(k, d);
        }
        latents.push_back(model::encode_channel(mp, c.name, points));
      } else {
        latents.push_back(model::encode_channel(mp, c.name, sample->payload[i]));
      }
      subset.push_back(i);
    }
    const std::vector<double> w = model::hierarchical_weights(mp.channels, subset, nullptr);
    std::vector<const Tensor*> ptrs;
    for (const auto& l : latents) ptrs.push_back(&l);
    out.emplace_back(label, model::blend_latents(ptrs, w).data);
  }
  return out;
}

std::vector<LatentTraceRow> latent_trace(
    const std::vector<std::pair<std::int64_t, std::vector<std::vector<double>>>>& snapshots,
    const std::vector<std::string>& labels) {
  require(snapshots.size() >= 2, "latent trace needs at least 2 snapshots");
  std::vector<std::vector<double>> pooled;
  for (const auto& [step, latents] : snapshots) {
    require(latents.size() == labels.size(), "latent trace: label count mismatch");
    for (const auto& l : latents) pooled.push_back(l);
  }
  const Pca2d proj = pca_2d(pooled);
  std::vector<LatentTraceRow> rows;
  std::size_t k = 0;
  for (const auto& [step, latents] : snapshots)
    for (std::size_t i = 0; i < latents.size(); ++i, ++k)
      rows.push_back({step, labels[i], proj.points[k][0], proj.points[k][1]});
  return rows;
}

void write_latent_csv(const std::vector<LatentTraceRow>& rows, const std::string& path) {
  auto out = open_out(path);
  out << "step,object,pc1,pc2\n";
  out.precision(12);
  for (const auto& r : rows)
    out << r.step << ',' << r.label << ',' << r.pc1 << ',' << r.pc2 << '\n';
  require(out.good(), "write failed: " + path);
}

double silhouette(const std::vector<std::array<double, 2>>& points,
                  const std::vector<int>& labels) {
  require(points.size() == labels.size() && points.size() >= 3, "silhouette: bad input");
  auto dist = [&](std::size_t a, std::size_t b) {
    const double dx = points[a][0] - points[b][0];
    const double dy = points[a][1] - points[b][1];
    return std::sqrt(dx * dx + dy * dy);
  };
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double intra = 0.0, inter = 0.0;
    std::size_t n_intra = 0, n_inter = 0;
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (j == i) continue;
      if (labels[j] == labels[i]) {
        intra += dist(i, j);
        ++n_intra;
      } else {
        inter += dist(i, j);
        ++n_inter;
      }
    }
    require(n_inter > 0, "silhouette: need two classes");
    const double a = n_intra == 0 ? 0.0 : intra / static_cast<double>(n_intra);
    const double b = inter / static_cast<double>(n_inter);
    const double denom = std::max(a, b);
    total += denom == 0.0 ? 0.0 : (b - a) / denom;
  }
  return total / static_cast<double>(points.size());
}

double mean_intra_class_distance(const std::vector<std::array<double, 2>>& points,
                                 const std::vector<int>& labels) {
  require(points.size() == labels.size(), "intra distance: bad input");
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      if (labels[i] != labels[j]) continue;
      const double dx = points[i][0] - points[j][0];
      const double dy = points[i][1] - points[j][1];
      total += std::sqrt(dx * dx + dy * dy);
      ++count;
    }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

bool effect_class_matches(const Tensor& effect_mu, const std::string& direction,
                          bool correct_class_rolled) {
  require(effect_mu.ndim() == 2 && effect_mu.cols() >= 2, "effect class: bad trajectory");
  double dx, dy;
  synth::push_direction(direction, dx, dy);
  const std::size_t last = effect_mu.rows() - 1;
  const double fx = effect_mu.at(last, 0);
  const double fy = effect_mu.at(last, 1);
  const double rolled_final = synth::roll_displacement(1.0, true);
  const double stopped_final = synth::roll_displacement(1.0, false);
  auto dist_to = [&](double mag) {
    const double ex = dx * mag, ey = dy * mag;
    return std::hypot(fx - ex, fy - ey);
  };
  const double d_correct = dist_to(correct_class_rolled ? rolled_final : stopped_final);
  const double d_wrong = dist_to(correct_class_rolled ? stopped_final : rolled_final);
  return d_correct < d_wrong;
}

namespace {

// (object image, one agent's action) -> generated effect class check.
bool query_effect_class(const model::ModelParameters& mp, const Dataset& full,
                        const std::string& object, const std::string& agent,
                        const std::string& variant, const std::string& direction,
                        bool cone_rolls, std::string& note) {
  const AffordanceSample* sample = nullptr;
  for (const auto& s : full.samples) {
    if (s.meta.split != "test" || s.meta.label != object) continue;
    if (s.meta.direction != direction) continue;
    if (agent == "ur10" && s.meta.variant != variant) continue;
    sample = &s;
    break;
  }
  require(sample != nullptr, "transfer: no test sample for " + object + "/" + direction);

  data::GenerationRequest req;
  const std::size_t obj_idx = full.channel_index("object");
  const std::size_t agent_idx = full.channel_index(agent);
  data::ObservedChannel img;
  img.name = "object";
  img.image = sample->payload[obj_idx];
  req.observed.push_back(std::move(img));
  data::ObservedChannel act;
  act.name = agent;
  const ChannelSpec& aspec = full.channels[agent_idx];
  const std::vector<double> grid = data::time_grid(aspec.length);
  for (std::size_t k = 0; k < aspec.length; ++k) {
    data::ConditionPoint p;
    p.t = grid[k];
    p.value.resize(aspec.dim);
    for (std::size_t d = 0; d < aspec.dim; ++d) p.value[d] = sample->payload[agent_idx].at(k, d);
    act.points.push_back(std::move(p));
  }
  req.observed.push_back(std::move(act));
  req.outputs = {"effect"};

  const model::Predictions preds = model::generate(mp, req);
  const bool correct_rolled = synth::object_rolls(object, direction, cone_rolls);
  const bool ok = effect_class_matches(preds.at("effect").mu, direction, correct_rolled);
  note = object + "|" + agent + (agent == "ur10" ? "(" + variant + ")" : "") + "|" + direction +
         (ok ? ": class ok" : ": class wrong");
  return ok;
}

double full_conditioning_effect_rms(const model::ModelParameters& mp, const Dataset& test_ds) {
  InputConfiguration full_cfg;
  for (const auto& c : mp.channels) full_cfg.channels.push_back(c.name);
  full_cfg.name = "full";
  const EvaluationReport rep = rms_table(test_ds, {full_cfg}, model_generator(mp));
  const ReportRow* row = rep.find("full", "effect");
  require(row != nullptr, "transfer: no effect row in retention report");
  return row->rms;
}

}  // namespace

TransferVerdict run_transfer_protocol(const TransferProtocol& protocol,
                                      const TransferConfig& cfg) {
  require(!protocol.initial_objects.empty(), "transfer: no initial objects");
  const auto& known = synth::rollability_shapes();
  auto check_known = [&known](const std::string& s) {
    require(std::find(known.begin(), known.end(), s) != known.end(),
            "transfer: unknown object " + s);
  };
  for (const auto& o : protocol.initial_objects) check_known(o);
  check_known(protocol.new_object);

  synth::ScenarioConfig synth_cfg = cfg.synth;
  synth_cfg.scenario = synth::Scenario::Rollability;
  synth_cfg.shapes = protocol.initial_objects;
  synth_cfg.shapes.push_back(protocol.new_object);
  const Dataset full = synth::gen_rollability(synth_cfg);

  // Initial pool: training samples of the initial objects.
  std::vector<std::size_t> initial_idx;
  std::vector<std::size_t> demo_idx;
  for (std::size_t i = 0; i < full.samples.size(); ++i) {
    const auto& m = full.samples[i].meta;
    if (m.split != "train") continue;
    if (std::find(protocol.initial_objects.begin(), protocol.initial_objects.end(), m.label) !=
        protocol.initial_objects.end()) {
      initial_idx.push_back(i);
    } else if (m.label == protocol.new_object && m.direction == protocol.demo_direction) {
      // Single-agent demonstration; one action style only.
      const std::string want = protocol.demo_agent == "ur10" ? protocol.demo_variant : "fingers";
      if (m.variant == want) demo_idx.push_back(i);
    }
  }
  Dataset initial = full.subset(initial_idx);
  Dataset demo = full.subset(demo_idx);
  require(!demo.samples.empty(), "transfer: demo pool is empty");
  // Mask every agent channel except the demonstrating one.
  for (auto& s : demo.samples)
    for (std::size_t c = 0; c < demo.channels.size(); ++c)
      if (demo.channels[c].is_action() && demo.channels[c].name != protocol.demo_agent) {
        s.mask[c] = 0;
        s.payload[c] = Tensor();
      }

  // Old-object test rows for retention measurement.
  std::vector<std::size_t> old_test_idx;
  for (std::size_t i = 0; i < full.samples.size(); ++i) {
    const auto& m = full.samples[i].meta;
    if (m.split == "test" &&
        std::find(protocol.initial_objects.begin(), protocol.initial_objects.end(), m.label) !=
            protocol.initial_objects.end())
      old_test_idx.push_back(i);
  }
  const Dataset old_test = full.subset(old_test_idx);

  model::ModelParameters mp = model::init_model(full.channels, cfg.hyper, cfg.seed);
  model::TrainConfig tc;
  tc.iterations = cfg.pretrain_iterations;
  tc.seed = cfg.seed;
  tc.adam = cfg.adam;
  model::train(mp, initial, tc);

  TransferVerdict verdict;
  verdict.protocol = protocol.name;
  verdict.retention_rms_before = full_conditioning_effect_rms(mp, old_test);

  model::TrainConfig cc = tc;
  cc.iterations = cfg.continue_iterations;
  model::continue_training(mp, initial, demo, cc);

  verdict.retention_rms_after = full_conditioning_effect_rms(mp, old_test);

  struct Query {
    std::string agent, variant;
  };
  std::vector<Query> agents;
  for (const auto& c : full.channels) {
    if (!c.is_action()) continue;
    if (c.name == "ur10") {
      agents.push_back({"ur10", "fingers"});
      agents.push_back({"ur10", "palm"});
    } else {
      agents.push_back({c.name, ""});
    }
  }

  // (a) cross-agent transfer along the demonstrated direction.
  verdict.transfer_ok = true;
  for (const auto& q : agents) {
    if (q.agent == protocol.demo_agent) continue;
    std::string note;
    const bool ok = query_effect_class(mp, full, protocol.new_object, q.agent, q.variant,
                                       protocol.demo_direction, synth_cfg.cone_rolls, note);
    verdict.transfer_ok = verdict.transfer_ok && ok;
    verdict.notes.push_back("transfer " + note);
  }
  // (b) generalization to unseen push directions (all agents).
  verdict.direction_ok = true;
  for (const auto& dir : synth::rollability_directions()) {
    if (dir == protocol.demo_direction) continue;
    for (const auto& q : agents) {
      std::string note;
      const bool ok = query_effect_class(mp, full, protocol.new_object, q.agent, q.variant, dir,
                                         synth_cfg.cone_rolls, note);
      verdict.direction_ok = verdict.direction_ok && ok;
      verdict.notes.push_back("direction " + note);
    }
  }
  return verdict;
}

std::vector<TransferVerdict> transfer_matrix(const std::vector<TransferProtocol>& protocols,
                                             const TransferConfig& cfg) {
  std::vector<TransferVerdict> out;
  for (const auto& p : protocols) out.push_back(run_transfer_protocol(p, cfg));
  return out;
}

void write_transfer_csv(const std::vector<TransferVerdict>& verdicts, const std::string& path) {
  auto out = open_out(path);
  out << "protocol,transfer,direction_generalization,retention_rms_before,retention_rms_after\n";
  out.precision(12);
  for (const auto& v : verdicts)
    out << v.protocol << ',' << (v.transfer_ok ? "yes" : "no") << ','
        << (v.direction_ok ? "yes" : "no") << ',' << v.retention_rms_before << ','
        << v.retention_rms_after << '\n';
  require(out.good(), "write failed: " + path);
}

void write_transfer_json(const std::vector<TransferVerdict>& verdicts, const std::string& path) {
  json j = json::array();
  for (const auto& v : verdicts)
    j.push_back(json{{"protocol", v.protocol},
                     {"transfer", v.transfer_ok},
                     {"direction_generalization", v.direction_ok},
                     {"retention_rms_before", v.retention_rms_before},
                     {"retention_rms_after", v.retention_rms_after},
                     {"notes", v.notes}});
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  require(out.good(), "write failed: " + path);
}

}  // namespace afford::eval
