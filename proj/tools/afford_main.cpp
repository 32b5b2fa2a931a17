// Operator surface: dataset synthesis, training, generation and the
// evaluation pipelines, all reproducible from explicit seeds.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "afford/baseline.hpp"
#include "afford/dataspec.hpp"
#include "afford/error.hpp"
#include "afford/eval.hpp"
#include "afford/model.hpp"
#include "afford/synthgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Removes outputs of a failed command so partial files never survive.
class OutputGuard {
 public:
  void track(const fs::path& p) { paths_.push_back(p); }
  void commit() { committed_ = true; }
  ~OutputGuard() {
    if (committed_) return;
    for (const auto& p : paths_) {
      std::error_code ec;
      fs::remove_all(p, ec);
    }
  }

 private:
  std::vector<fs::path> paths_;
  bool committed_ = false;
};

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  afford::require(j.is_object(), where + ": expected a JSON object");
  for (const auto& [key, value] : j.items())
    afford::require(allowed.count(key) != 0, where + ": unknown key '" + key + "'");
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  afford::require(in.good(), "cannot open file: " + path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

afford::model::ModelHyper hyper_from_json(const json& j, const afford::data::Dataset& ds) {
  afford::model::ModelHyper h;
  check_keys(j, {"latent_dim", "hidden_width", "conv_widths", "sigma_floor"}, "config.model");
  if (j.contains("latent_dim")) h.latent_dim = j.at("latent_dim").get<std::size_t>();
  if (j.contains("hidden_width")) h.hidden_width = j.at("hidden_width").get<std::size_t>();
  if (j.contains("conv_widths")) h.conv_widths = j.at("conv_widths").get<std::array<std::size_t, 3>>();
  if (j.contains("sigma_floor")) h.sigma_floor = j.at("sigma_floor").get<double>();
  for (const auto& c : ds.channels) {
    if (c.kind == afford::data::ChannelKind::Trajectory) h.t_steps = c.length;
    else h.image_side = c.height;
  }
  return h;
}

struct TrainSettings {
  afford::model::ModelHyper hyper;
  afford::model::TrainConfig train;
};

TrainSettings settings_from_config(const std::string& config_path,
                                   const afford::data::Dataset& ds) {
  TrainSettings s;
  json j = json::object();
  if (!config_path.empty()) j = json::parse(slurp(config_path));
  check_keys(j, {"version", "model", "train"}, "config");
  if (j.contains("version"))
    afford::require(j.at("version").get<int>() == 1, "config: unsupported version");
  s.hyper = hyper_from_json(j.value("model", json::object()), ds);
  const json jt = j.value("train", json::object());
  check_keys(jt, {"iterations", "seed", "lr", "snapshot_every"}, "config.train");
  if (jt.contains("iterations")) s.train.iterations = jt.at("iterations").get<std::int64_t>();
  if (jt.contains("seed")) s.train.seed = jt.at("seed").get<std::uint64_t>();
  if (jt.contains("lr")) s.train.adam.lr = jt.at("lr").get<double>();
  if (jt.contains("snapshot_every")) s.train.snapshot_every = jt.at("snapshot_every").get<std::int64_t>();
  return s;
}

void write_loss_csv(const std::vector<double>& losses, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  afford::require(out.good(), "cannot write " + path);
  out << "step,loss\n";
  out.precision(12);
  for (std::size_t i = 0; i < losses.size(); ++i) out << (i + 1) << ',' << losses[i] << '\n';
  afford::require(out.good(), "write failed: " + path);
}

std::string snapshot_name(std::int64_t step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "snapshot_%06lld.affm", static_cast<long long>(step));
  return buf;
}

int cmd_synth(const std::string& task, const std::string& out, std::uint64_t seed, double noise,
              std::size_t spo, bool cone_rolls) {
  afford::synth::ScenarioConfig cfg;
  cfg.scenario = afford::synth::scenario_from_name(task);
  cfg.seed = seed;
  cfg.noise = noise;
  cfg.samples_per_object = spo;
  cfg.cone_rolls = cone_rolls;
  const afford::data::Dataset ds = afford::synth::generate(cfg);

  OutputGuard guard;
  guard.track(out);
  afford::data::write_dataset(ds, out);
  guard.commit();

  std::map<std::string, std::size_t> digest;
  for (const auto& s : ds.samples) digest[s.meta.split + " / " + s.meta.outcome] += 1;
  std::set<std::string> train_objects, test_objects;
  for (const auto& s : ds.samples)
    (s.meta.split == "test" ? test_objects : train_objects).insert(s.meta.label);
  std::cout << "wrote " << out << ": " << ds.samples.size() << " samples, "
            << train_objects.size() << " train + " << test_objects.size() << " test objects\n";
  for (const auto& [key, count] : digest) std::cout << "  " << key << ": " << count << '\n';
  return 0;
}

int cmd_train(const std::string& data_path, const std::string& config_path,
              const std::string& out_dir, std::int64_t snapshot_every,
              const std::string& baseline_variant, const std::string& split) {
  const afford::data::Dataset full = afford::data::read_dataset(data_path);
  const afford::data::Dataset ds =
      split == "all" ? full : full.subset(full.split_indices(split));
  afford::require(!ds.samples.empty(), "no samples in split '" + split + "'");
  TrainSettings s = settings_from_config(config_path, ds);
  if (snapshot_every > 0) s.train.snapshot_every = snapshot_every;

  OutputGuard guard;
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);

  if (!baseline_variant.empty()) {
    afford::baseline::BaselineVariant variant =
        afford::baseline::BaselineVariant::from_name(baseline_variant);
    afford::baseline::BaselineHyper bh;
    bh.embed_dim = s.hyper.latent_dim;
    bh.hidden_width = s.hyper.hidden_width;
    bh.conv_widths = s.hyper.conv_widths;
    bh.t_steps = s.hyper.t_steps;
    bh.image_side = s.hyper.image_side;
    bh.sigma_floor = s.hyper.sigma_floor;
    auto bp = afford::baseline::init_baseline(ds.channels, bh, variant, s.train.seed);
    afford::baseline::BaselineTrainConfig btc;
    btc.iterations = s.train.iterations;
    btc.seed = s.train.seed;
    btc.adam = s.train.adam;
    const auto losses = afford::baseline::baseline_train(bp, ds, btc);
    const fs::path model_path = dir / "baseline.affb";
    const fs::path loss_path = dir / "loss.csv";
    guard.track(model_path);
    guard.track(loss_path);
    afford::baseline::write_baseline(bp, model_path.string());
    write_loss_csv(losses, loss_path.string());
    guard.commit();
    std::cout << "wrote " << model_path.string() << " (variant " << variant.name() << ")\n";
    return 0;
  }

  auto mp = afford::model::init_model(ds.channels, s.hyper, s.train.seed);
  const fs::path snap_dir = dir / "snapshots";
  if (s.train.snapshot_every > 0) {
    fs::create_directories(snap_dir);
    guard.track(snap_dir);
  }
  afford::model::SnapshotFn snapshot = nullptr;
  if (s.train.snapshot_every > 0)
    snapshot = [&snap_dir](std::int64_t step, const afford::model::ModelParameters& m) {
      afford::model::write_model(m, (snap_dir / snapshot_name(step)).string());
    };
  const auto losses = afford::model::train(mp, ds, s.train, snapshot);
  const fs::path model_path = dir / "model.affm";
  const fs::path loss_path = dir / "loss.csv";
  guard.track(model_path);
  guard.track(loss_path);
  afford::model::write_model(mp, model_path.string());
  write_loss_csv(losses, loss_path.string());
  guard.commit();
  std::cout << "wrote " << model_path.string() << " after " << s.train.iterations << " steps\n";
  return 0;
}

int cmd_generate(const std::string& model_path, const std::string& request_path,
                 const std::string& out) {
  const auto mp = afford::model::read_model(model_path);
  const auto request = afford::data::GenerationRequest::from_json(slurp(request_path));
  const auto preds = afford::model::generate(mp, request);

  OutputGuard guard;
  guard.track(out);
  std::ofstream os(out, std::ios::trunc);
  afford::require(os.good(), "cannot write " + out);
  os << "channel,row,col,mu,sigma\n";
  os.precision(12);
  for (const auto& name : request.outputs) {
    const auto& pred = preds.at(name);
    const auto& spec = mp.channel(name);
    if (spec.kind == afford::data::ChannelKind::Trajectory) {
      const std::vector<double> times =
          request.times.empty() ? afford::data::time_grid(mp.hyper.t_steps) : request.times;
      for (std::size_t i = 0; i < pred.mu.rows(); ++i)
        for (std::size_t d = 0; d < pred.mu.cols(); ++d)
          os << name << ',' << times[i] << ',' << d << ',' << pred.mu.at(i, d) << ','
             << pred.sigma.at(i, d) << '\n';
    } else {
      for (std::size_t y = 0; y < pred.mu.rows(); ++y)
        for (std::size_t x = 0; x < pred.mu.cols(); ++x)
          os << name << ',' << y << ',' << x << ',' << pred.mu.at(y, x) << ','
             << pred.sigma.data[0] << '\n';
    }
  }
  afford::require(os.good(), "write failed: " + out);
  guard.commit();
  std::cout << "wrote " << out << '\n';
  return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& data_path,
                 const std::string& configs, const std::string& report_dir,
                 const std::string& split) {
  const auto mp = afford::model::read_model(model_path);
  const auto full = afford::data::read_dataset(data_path);
  afford::model::check_dataset_compatible(mp, full);
  const afford::data::Dataset ds =
      split == "all" ? full : full.subset(full.split_indices(split));
  afford::require(!ds.samples.empty(), "no samples in split '" + split + "'");

  std::vector<afford::eval::InputConfiguration> cfgs;
  if (configs == "all") {
    cfgs = afford::eval::all_configurations(ds.channels);
  } else {
    std::stringstream ss(configs);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) cfgs.push_back(afford::eval::parse_configuration(item));
    afford::require(!cfgs.empty(), "no input configurations given");
    for (const auto& c : cfgs)
      for (const auto& name : c.channels) ds.channel_index(name);  // validate
  }

  const auto report = afford::eval::rms_table(ds, cfgs, afford::eval::model_generator(mp));
  OutputGuard guard;
  fs::create_directories(report_dir);
  const fs::path dir(report_dir);
  const fs::path csv = dir / "report.csv";
  const fs::path js = dir / "report.json";
  guard.track(csv);
  guard.track(js);
  afford::eval::write_report_csv(report, csv.string());
  afford::eval::write_report_json(report, js.string());
  guard.commit();
  std::cout << "wrote " << csv.string() << " (" << report.rows.size() << " rows)\n";
  return 0;
}

int cmd_analyze_latent(const std::string& snapshots, const std::string& data_path,
                       const std::string& out) {
  const auto full = afford::data::read_dataset(data_path);
  std::vector<std::pair<std::int64_t, fs::path>> files;
  afford::require(fs::is_directory(snapshots), "--snapshots must be a directory");
  for (const auto& entry : fs::directory_iterator(snapshots)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("snapshot_", 0) != 0 || entry.path().extension() != ".affm") continue;
    files.emplace_back(std::stoll(name.substr(9, name.size() - 9 - 5)), entry.path());
  }
  std::sort(files.begin(), files.end());
  afford::require(files.size() >= 2, "need at least 2 snapshots in " + snapshots);

  std::vector<std::pair<std::int64_t, std::vector<std::vector<double>>>> snaps;
  std::vector<std::string> labels;
  for (const auto& [step, path] : files) {
    const auto mp = afford::model::read_model(path.string());
    const auto latents = afford::eval::object_latents(mp, full);
    if (labels.empty())
      for (const auto& [label, latent] : latents) labels.push_back(label);
    std::vector<std::vector<double>> just_latents;
    for (const auto& [label, latent] : latents) just_latents.push_back(latent);
    snaps.emplace_back(step, std::move(just_latents));
  }
  const auto rows = afford::eval::latent_trace(snaps, labels);
  OutputGuard guard;
  guard.track(out);
  afford::eval::write_latent_csv(rows, out);
  guard.commit();
  std::cout << "wrote " << out << " (" << rows.size() << " rows)\n";
  return 0;
}

int cmd_transfer(const std::string& protocol_path, const std::string& report) {
  const json j = json::parse(slurp(protocol_path));
  check_keys(j, {"version", "synth", "model", "train", "protocols"}, "protocol");
  afford::require(j.value("version", 0) == 1, "protocol: unsupported version");

  afford::eval::TransferConfig cfg;
  cfg.synth.scenario = afford::synth::Scenario::Rollability;
  const json js = j.value("synth", json::object());
  check_keys(js, {"seed", "noise", "samples_per_object", "cone_rolls"}, "protocol.synth");
  if (js.contains("seed")) cfg.synth.seed = js.at("seed").get<std::uint64_t>();
  if (js.contains("noise")) cfg.synth.noise = js.at("noise").get<double>();
  if (js.contains("samples_per_object"))
    cfg.synth.samples_per_object = js.at("samples_per_object").get<std::size_t>();
  if (js.contains("cone_rolls")) cfg.synth.cone_rolls = js.at("cone_rolls").get<bool>();

  const json jm = j.value("model", json::object());
  check_keys(jm, {"latent_dim", "hidden_width", "conv_widths", "sigma_floor"}, "protocol.model");
  if (jm.contains("latent_dim")) cfg.hyper.latent_dim = jm.at("latent_dim").get<std::size_t>();
  if (jm.contains("hidden_width")) cfg.hyper.hidden_width = jm.at("hidden_width").get<std::size_t>();
  if (jm.contains("conv_widths"))
    cfg.hyper.conv_widths = jm.at("conv_widths").get<std::array<std::size_t, 3>>();
  if (jm.contains("sigma_floor")) cfg.hyper.sigma_floor = jm.at("sigma_floor").get<double>();
  cfg.hyper.t_steps = cfg.synth.t_steps;
  cfg.hyper.image_side = cfg.synth.image_side;

  const json jt = j.value("train", json::object());
  check_keys(jt, {"pretrain_iterations", "continue_iterations", "seed", "lr"}, "protocol.train");
  if (jt.contains("pretrain_iterations"))
    cfg.pretrain_iterations = jt.at("pretrain_iterations").get<std::int64_t>();
  if (jt.contains("continue_iterations"))
    cfg.continue_iterations = jt.at("continue_iterations").get<std::int64_t>();
  if (jt.contains("seed")) cfg.seed = jt.at("seed").get<std::uint64_t>();
  if (jt.contains("lr")) cfg.adam.lr = jt.at("lr").get<double>();

  std::vector<afford::eval::TransferProtocol> protocols;
  for (const auto& jp : j.at("protocols")) {
    check_keys(jp, {"name", "initial_objects", "new_object", "demo_agent", "demo_direction",
                    "demo_variant"},
               "protocol entry");
    afford::eval::TransferProtocol p;
    p.name = jp.at("name").get<std::string>();
    p.initial_objects = jp.at("initial_objects").get<std::vector<std::string>>();
    p.new_object = jp.at("new_object").get<std::string>();
    if (jp.contains("demo_agent")) p.demo_agent = jp.at("demo_agent").get<std::string>();
    if (jp.contains("demo_direction")) p.demo_direction = jp.at("demo_direction").get<std::string>();
    if (jp.contains("demo_variant")) p.demo_variant = jp.at("demo_variant").get<std::string>();
    protocols.push_back(std::move(p));
  }
  afford::require(!protocols.empty(), "protocol file lists no protocols");

  std::vector<afford::eval::TransferVerdict> verdicts;
  for (const auto& p : protocols) {
    std::cout << "running protocol " << p.name << "...\n" << std::flush;
    verdicts.push_back(afford::eval::run_transfer_protocol(p, cfg));
    const auto& v = verdicts.back();
    std::cout << "  transfer " << (v.transfer_ok ? "yes" : "no") << ", direction "
              << (v.direction_ok ? "yes" : "no") << '\n';
  }

  OutputGuard guard;
  guard.track(report);
  const std::string json_path = report + ".json";
  guard.track(json_path);
  afford::eval::write_transfer_csv(verdicts, report);
  afford::eval::write_transfer_json(verdicts, json_path);
  guard.commit();
  std::cout << "wrote " << report << " and " << json_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"affordance-space learner: synthetic scenarios, training, generation, evaluation"};
  app.require_subcommand(1);

  // synth
  std::string task, out_path;
  std::uint64_t seed = 0;
  double noise = 0.02;
  std::size_t spo = 20;
  bool cone_rolls = false;
  auto* synth = app.add_subcommand("synth", "generate a synthetic scenario dataset");
  synth->add_option("--task", task, "insertability | graspability | rollability")->required();
  synth->add_option("--out", out_path, "output dataset path (.affd)")->required();
  synth->add_option("--seed", seed, "generator seed (default 0)");
  synth->add_option("--noise", noise, "trajectory noise sigma (default 0.02)");
  synth->add_option("--samples-per-object", spo, "noise realizations per object (default 20)");
  synth->add_flag("--cone-rolls", cone_rolls, "classify the cone as rollable");

  // train
  std::string data_path, config_path, out_dir, baseline_variant, split = "train";
  std::int64_t snapshot_every = 0;
  auto* train = app.add_subcommand("train", "train the model (or a baseline variant)");
  train->add_option("--data", data_path, "dataset path (.affd)")->required();
  train->add_option("--config", config_path, "run-config JSON (defaults when omitted)");
  train->add_option("--out-dir", out_dir, "output directory")->required();
  train->add_option("--snapshot-every", snapshot_every, "write a snapshot every N steps");
  train->add_option("--baseline", baseline_variant,
                    "train a baseline variant instead: nll-with-time | nll-without-time | "
                    "mse-with-time | mse-without-time");
  train->add_option("--split", split, "samples to train on: train | test | all (default train)");

  // generate
  std::string model_path, request_path, gen_out;
  auto* gen = app.add_subcommand("generate", "decode requested channels from conditions");
  gen->add_option("--model", model_path, "model path (.affm)")->required();
  gen->add_option("--request", request_path, "request JSON path")->required();
  gen->add_option("--out", gen_out, "output CSV path")->required();

  // evaluate
  std::string eval_model, eval_data, eval_configs = "all", report_dir, eval_split = "test";
  auto* ev = app.add_subcommand("evaluate", "masked-input RMS / sigma tables");
  ev->add_option("--model", eval_model, "model path (.affm)")->required();
  ev->add_option("--data", eval_data, "dataset path (.affd)")->required();
  ev->add_option("--configs", eval_configs,
                 "'all' or comma-separated '+'-joined channel sets (default all)");
  ev->add_option("--report-dir", report_dir, "output directory")->required();
  ev->add_option("--split", eval_split, "samples to evaluate: test | train | all (default test)");

  // analyze-latent
  std::string snap_dir, latent_data, latent_out;
  auto* lat = app.add_subcommand("analyze-latent", "PCA trace of affordance latents over training");
  lat->add_option("--snapshots", snap_dir, "directory of snapshot_*.affm files")->required();
  lat->add_option("--data", latent_data, "dataset path (.affd)")->required();
  lat->add_option("--out", latent_out, "output CSV path")->required();

  // transfer
  std::string protocol_path, transfer_report;
  auto* tr = app.add_subcommand("transfer", "cross-embodiment transfer protocol runner");
  tr->add_option("--protocol", protocol_path, "protocol JSON path")->required();
  tr->add_option("--report", transfer_report, "output CSV path (JSON written alongside)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(task, out_path, seed, noise, spo, cone_rolls);
    if (train->parsed())
      return cmd_train(data_path, config_path, out_dir, snapshot_every, baseline_variant, split);
    if (gen->parsed()) return cmd_generate(model_path, request_path, gen_out);
    if (ev->parsed()) return cmd_evaluate(eval_model, eval_data, eval_configs, report_dir, eval_split);
    if (lat->parsed()) return cmd_analyze_latent(snap_dir, latent_data, latent_out);
    if (tr->parsed()) return cmd_transfer(protocol_path, transfer_report);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
