#include "afford/synthgen.hpp"

#include <cmath>
#include <cstdio>
#include <functional>

#include <json.hpp>

#include "afford/error.hpp"
#include "afford/rng.hpp"

namespace afford::synth {

using data::AffordanceSample;
using data::ChannelKind;
using data::ChannelSpec;
using data::Dataset;
using num::Rng;
using num::Tensor;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kRodHalfWidth = 0.10;

std::string fmt2(const char* prefix, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%.2f", prefix, v);
  return buf;
}

ChannelSpec traj_channel(const std::string& name, std::size_t dim, std::size_t t_steps,
                         const std::string& units, const std::string& agent = "") {
  ChannelSpec c;
  c.name = name;
  c.kind = ChannelKind::Trajectory;
  c.dim = dim;
  c.length = t_steps;
  c.units = units;
  c.agent = agent;
  return c;
}

ChannelSpec image_channel(std::size_t side) {
  ChannelSpec c;
  c.name = "object";
  c.kind = ChannelKind::Image;
  c.dim = side * side;
  c.length = 1;
  c.units = "normalized-depth";
  c.height = side;
  c.width = side;
  return c;
}

// Pixel-center coordinates on [-0.5, 0.5]^2.
void pixel_xy(std::size_t r, std::size_t c, std::size_t side, double& x, double& y) {
  x = (static_cast<double>(c) + 0.5) / static_cast<double>(side) - 0.5;
  y = (static_cast<double>(r) + 0.5) / static_cast<double>(side) - 0.5;
}

Tensor render_opening(double half_width, std::size_t side) {
  Tensor img({side, side});
  for (std::size_t r = 0; r < side; ++r)
    for (std::size_t c = 0; c < side; ++c) {
      double x, y;
      pixel_xy(r, c, side, x, y);
      const bool inside = std::max(std::fabs(x), std::fabs(y)) <= half_width;
      img.at(r, c) = inside ? 1.0 : 0.5;  // opening is deeper than the surface
    }
  return img;
}

// Height-field render: value = 0.5 - 0.45*h, object closer than background.
Tensor render_height(std::size_t side, const std::function<double(double, double)>& h) {
  Tensor img({side, side});
  for (std::size_t r = 0; r < side; ++r)
    for (std::size_t c = 0; c < side; ++c) {
      double x, y;
      pixel_xy(r, c, side, x, y);
      img.at(r, c) = 0.5 - 0.45 * std::max(0.0, std::min(1.0, h(x, y)));
    }
  return img;
}

Tensor render_grasp_object(double size, std::size_t side) {
  const double hw = 0.1 + 0.35 * size;
  return render_height(side, [hw](double x, double y) {
    return std::max(std::fabs(x), std::fabs(y)) <= hw ? 1.0 : 0.0;
  });
}

Tensor render_roll_object(const std::string& shape, std::size_t side) {
  if (shape == "cuboid")
    return render_height(side, [](double x, double y) {
      return std::max(std::fabs(x), std::fabs(y)) <= 0.25 ? 1.0 : 0.0;
    });
  if (shape == "cylinder")
    return render_height(side, [](double x, double y) {
      return std::hypot(x, y) <= 0.25 ? 1.0 : 0.0;
    });
  if (shape == "sphere")
    return render_height(side, [](double x, double y) {
      const double r = std::hypot(x, y) / 0.3;
      return r <= 1.0 ? std::sqrt(1.0 - r * r) : 0.0;
    });
  if (shape == "cone")
    return render_height(side, [](double x, double y) {
      const double r = std::hypot(x, y) / 0.3;
      return r <= 1.0 ? 1.0 - r : 0.0;
    });
  if (shape.rfind("side-cylinder-", 0) == 0) {
    const double theta = std::stod(shape.substr(14)) * kPi / 180.0;
    const double ca = std::cos(theta), sa = std::sin(theta);
    return render_height(side, [ca, sa](double x, double y) {
      const double along = x * ca + y * sa;
      const double perp = -x * sa + y * ca;
      if (std::fabs(along) > 0.35 || std::fabs(perp) > 0.18) return 0.0;
      const double q = perp / 0.18;
      return std::sqrt(1.0 - q * q);
    });
  }
  throw Error("unknown rollability shape: " + shape);
}

Tensor joint_trajectory(const std::vector<double>& qs, const std::vector<double>& qe,
                        std::size_t t_steps, const std::function<double(double)>& profile) {
  Tensor out({t_steps, qs.size()});
  for (std::size_t i = 0; i < t_steps; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(t_steps - 1);
    const double s = profile(t);
    for (std::size_t d = 0; d < qs.size(); ++d) out.at(i, d) = qs[d] + (qe[d] - qs[d]) * s;
  }
  return out;
}

void add_noise(Tensor& t, Rng& rng, double sigma) {
  if (sigma <= 0.0) return;
  for (auto& v : t.data) v += rng.normal(0.0, sigma);
}

std::string provenance(const ScenarioConfig& cfg) {
  nlohmann::json j{{"scenario", scenario_name(cfg.scenario)},
                   {"seed", cfg.seed},
                   {"noise", cfg.noise},
                   {"samples_per_object", cfg.samples_per_object},
                   {"t_steps", cfg.t_steps},
                   {"image_side", cfg.image_side}};
  if (cfg.scenario == Scenario::Rollability) {
    j["cone_rolls"] = cfg.cone_rolls;
    j["shapes"] = cfg.shapes.empty() ? rollability_shapes() : cfg.shapes;
  }
  return j.dump();
}

}  // namespace

Scenario scenario_from_name(const std::string& s) {
  if (s == "insertability") return Scenario::Insertability;
  if (s == "graspability") return Scenario::Graspability;
  if (s == "rollability") return Scenario::Rollability;
  throw Error("unknown task: " + s + " (valid: insertability, graspability, rollability)");
}

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::Insertability: return "insertability";
    case Scenario::Graspability: return "graspability";
    case Scenario::Rollability: return "rollability";
  }
  return "?";
}

double min_jerk(double t) { return 10.0 * t * t * t - 15.0 * t * t * t * t + 6.0 * t * t * t * t * t; }

double roll_displacement(double t, bool rolled) {
  double d = 0.0;
  if (t >= 0.6)
    d = 0.1;
  else if (t >= 0.2)
    d = 0.1 * (t - 0.2) / 0.4;
  if (rolled && t >= 0.6) d = 0.1 + 0.3 * (t - 0.6) / 0.4;
  return d;
}

void push_direction(const std::string& name, double& dx, double& dy) {
  if (name == "straight") { dx = 1.0; dy = 0.0; return; }
  if (name == "left") { dx = 0.0; dy = 1.0; return; }
  if (name == "right") { dx = 0.0; dy = -1.0; return; }
  throw Error("unknown push direction: " + name);
}

bool object_rolls(const std::string& shape, const std::string& direction, bool cone_rolls) {
  if (shape == "sphere") return true;
  if (shape == "cone") return cone_rolls;
  if (shape == "cuboid" || shape == "cylinder") return false;
  if (shape.rfind("side-cylinder-", 0) == 0) {
    const int theta = std::stoi(shape.substr(14));
    int dir_deg = 0;
    if (direction == "left") dir_deg = 90;
    else if (direction == "right") dir_deg = 270;
    else require(direction == "straight", "unknown push direction: " + direction);
    // Rolls only when pushed perpendicular to its axis.
    return ((dir_deg - theta) % 180 + 180) % 180 == 90;
  }
  throw Error("unknown rollability shape: " + shape);
}

const std::vector<std::string>& rollability_shapes() {
  static const std::vector<std::string> shapes{
      "cuboid", "cylinder", "sphere", "cone",
      "side-cylinder-0", "side-cylinder-45", "side-cylinder-90", "side-cylinder-135"};
  return shapes;
}

const std::vector<std::string>& rollability_directions() {
  static const std::vector<std::string> dirs{"straight", "left", "right"};
  return dirs;
}

std::vector<double> action_pose(const std::string& agent, const std::string& tag,
                                std::size_t dim, bool end_pose) {
  Rng rng(Rng::fnv1a(agent + "|" + tag + "|" + (end_pose ? "end" : "start")));
  std::vector<double> q(dim);
  for (auto& v : q) v = rng.uniform(-kPi, kPi);
  return q;
}

data::Dataset gen_insertability(const ScenarioConfig& cfg) {
  require(cfg.t_steps >= 2, "insertability: t_steps too small");
  Dataset ds;
  ds.scenario = "insertability";
  ds.generator_config = provenance(cfg);
  ds.channels = {traj_channel("ur10", 6, cfg.t_steps, "radians", "ur10"),
                 traj_channel("effect", 1, cfg.t_steps, "newtons"),
                 image_channel(cfg.image_side)};

  struct Opening { double w; bool test; };
  // 4+4 training widths, off-boundary test widths (rod half-width 0.10).
  const std::vector<Opening> openings{
      {0.02, false}, {0.04, false}, {0.06, false}, {0.08, false},
      {0.12, false}, {0.14, false}, {0.16, false}, {0.18, false},
      {0.05, true},  {0.15, true}};

  const auto qs = action_pose("ur10", "insert", 6, false);
  const auto qe = action_pose("ur10", "insert", 6, true);

  std::uint64_t sample_index = 0;
  for (const auto& op : openings) {
    require(op.w > 0.0, "insertability: opening width must be positive");
    const bool insertable = op.w >= kRodHalfWidth;
    const std::size_t count = op.test ? 1 : cfg.samples_per_object;
    for (std::size_t k = 0; k < count; ++k, ++sample_index) {
      Rng rng(cfg.seed ^ sample_index);
      const double sigma = op.test ? 0.0 : cfg.noise;

      Tensor effect({cfg.t_steps, 1});
      for (std::size_t i = 0; i < cfg.t_steps; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(cfg.t_steps - 1);
        double f = 0.0;
        if (insertable) {
          if (t >= 0.9) f = 10.0 * (t - 0.9) / 0.1;
        } else {
          if (t >= 0.7) f = 10.0;
          else if (t >= 0.5) f = 10.0 * (t - 0.5) / 0.2;
        }
        effect.at(i, 0) = f;
      }
      // Blocked rod: motion freezes halfway through.
      Tensor action = joint_trajectory(qs, qe, cfg.t_steps, [insertable](double t) {
        return min_jerk(insertable ? t : std::min(t, 0.5));
      });
      add_noise(action, rng, sigma);
      add_noise(effect, rng, sigma);

      AffordanceSample s;
      s.payload = {std::move(action), std::move(effect), render_opening(op.w, cfg.image_side)};
      s.mask = {1, 1, 1};
      s.meta.label = fmt2("w=", op.w);
      s.meta.object_param = op.w;
      s.meta.outcome = insertable ? "inserted" : "not-inserted";
      s.meta.split = op.test ? "test" : "train";
      ds.samples.push_back(std::move(s));
    }
  }
  ds.validate();
  return ds;
}

data::Dataset gen_graspability(const ScenarioConfig& cfg) {
  Dataset ds;
  ds.scenario = "graspability";
  ds.generator_config = provenance(cfg);
  ds.channels = {traj_channel("ur10", 6, cfg.t_steps, "radians", "ur10"),
                 traj_channel("baxter", 7, cfg.t_steps, "radians", "baxter"),
                 traj_channel("effect", 3, cfg.t_steps, "meters"),
                 image_channel(cfg.image_side)};

  struct Object { double size; bool test; };
  const std::vector<Object> objects{
      {0.1, false}, {0.2, false}, {0.3, true},  {0.4, false}, {0.5, false},
      {0.6, false}, {0.7, false}, {0.8, true},  {0.9, false}, {1.0, false}};

  const auto ur10_s = action_pose("ur10", "grasp", 6, false);
  const auto ur10_e = action_pose("ur10", "grasp", 6, true);
  const auto bax_s = action_pose("baxter", "grasp", 7, false);
  const auto bax_e = action_pose("baxter", "grasp", 7, true);

  auto lifted_effect = [&cfg](bool lifted) {
    Tensor e({cfg.t_steps, 3});
    if (lifted)
      for (std::size_t i = 0; i < cfg.t_steps; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(cfg.t_steps - 1);
        e.at(i, 2) = t >= 0.5 ? 0.3 * (t - 0.5) / 0.5 : 0.0;
      }
    return e;
  };

  std::uint64_t sample_index = 0;
  for (const auto& ob : objects) {
    require(ob.size > 0.0 && ob.size <= 1.0, "graspability: size must be in (0,1]");
    const bool both = ob.size <= 0.5;  // baxter gripper only fits small objects
    const std::size_t count = ob.test ? 1 : cfg.samples_per_object;
    for (std::size_t k = 0; k < count; ++k) {
      const double sigma = ob.test ? 0.0 : cfg.noise;
      const Tensor img = render_grasp_object(ob.size, cfg.image_side);

      auto make = [&](bool with_ur10, bool with_baxter, bool lifted,
                      const char* variant) {
        Rng rng(cfg.seed ^ sample_index++);
        AffordanceSample s;
        s.payload.resize(4);
        s.mask = {0, 0, 1, 1};
        if (with_ur10) {
          s.mask[0] = 1;
          s.payload[0] = joint_trajectory(ur10_s, ur10_e, cfg.t_steps, min_jerk);
          add_noise(s.payload[0], rng, sigma);
        }
        if (with_baxter) {
          s.mask[1] = 1;
          s.payload[1] = joint_trajectory(bax_s, bax_e, cfg.t_steps, min_jerk);
          add_noise(s.payload[1], rng, sigma);
        }
        s.payload[2] = lifted_effect(lifted);
        add_noise(s.payload[2], rng, sigma);
        s.payload[3] = img;
        s.meta.label = fmt2("s=", ob.size);
        s.meta.object_param = ob.size;
        s.meta.outcome = lifted ? "lifted" : "not-lifted";
        s.meta.split = ob.test ? "test" : "train";
        s.meta.variant = variant;
        ds.samples.push_back(std::move(s));
      };

      if (both) {
        make(true, true, true, "both");
      } else {
        make(true, false, true, "ur10-only");
        make(false, true, false, "baxter-only");
      }
    }
  }
  ds.validate();
  return ds;
}

data::Dataset gen_rollability(const ScenarioConfig& cfg) {
  Dataset ds;
  ds.scenario = "rollability";
  ds.generator_config = provenance(cfg);
  ds.channels = {traj_channel("kuka", 7, cfg.t_steps, "radians", "kuka"),
                 traj_channel("ur10", 6, cfg.t_steps, "radians", "ur10"),
                 traj_channel("effect", 3, cfg.t_steps, "meters"),
                 image_channel(cfg.image_side)};

  const std::vector<std::string>& shapes = cfg.shapes.empty() ? rollability_shapes() : cfg.shapes;
  const std::vector<std::string> styles{"fingers", "palm"};

  std::uint64_t sample_index = 0;
  for (const auto& shape : shapes) {
    const Tensor img = render_roll_object(shape, cfg.image_side);
    double theta = 0.0;
    if (shape.rfind("side-cylinder-", 0) == 0) theta = std::stod(shape.substr(14));
    for (const auto& dir : rollability_directions()) {
      const bool rolled = object_rolls(shape, dir, cfg.cone_rolls);
      double dx, dy;
      push_direction(dir, dx, dy);

      const auto kuka_s = action_pose("kuka", "push-" + dir, 7, false);
      const auto kuka_e = action_pose("kuka", "push-" + dir, 7, true);

      for (const auto& style : styles) {
        // Two UR-10 action styles with identical effects (action equivalence).
        const auto ur_s = action_pose("ur10", "push-" + dir + "-" + style, 6, false);
        const auto ur_e = action_pose("ur10", "push-" + dir + "-" + style, 6, true);

        for (std::size_t block = 0; block < 2; ++block) {
          const bool test = block == 1;
          const std::size_t count = test ? 1 : cfg.samples_per_object;
          for (std::size_t k = 0; k < count; ++k) {
            Rng rng(cfg.seed ^ sample_index++);
            const double sigma = test ? 0.0 : cfg.noise;

            Tensor effect({cfg.t_steps, 3});
            for (std::size_t i = 0; i < cfg.t_steps; ++i) {
              const double t = static_cast<double>(i) / static_cast<double>(cfg.t_steps - 1);
              const double d = roll_displacement(t, rolled);
              effect.at(i, 0) = dx * d;
              effect.at(i, 1) = dy * d;
            }
            Tensor kuka = joint_trajectory(kuka_s, kuka_e, cfg.t_steps, min_jerk);
            Tensor ur10 = joint_trajectory(ur_s, ur_e, cfg.t_steps, min_jerk);
            add_noise(kuka, rng, sigma);
            add_noise(ur10, rng, sigma);
            add_noise(effect, rng, sigma);

            AffordanceSample s;
            s.payload = {std::move(kuka), std::move(ur10), std::move(effect), img};
            s.mask = {1, 1, 1, 1};
            s.meta.label = shape;
            s.meta.object_param = theta;
            s.meta.outcome = rolled ? "rolled" : "not-rolled";
            s.meta.split = test ? "test" : "train";
            s.meta.direction = dir;
            s.meta.variant = style;
            ds.samples.push_back(std::move(s));
          }
        }
      }
    }
  }
  ds.validate();
  return ds;
}

data::Dataset generate(const ScenarioConfig& cfg) {
  switch (cfg.scenario) {
    case Scenario::Insertability: return gen_insertability(cfg);
    case Scenario::Graspability: return gen_graspability(cfg);
    case Scenario::Rollability: return gen_rollability(cfg);
  }
  throw Error("unknown scenario");
}

}  // namespace afford::synth
