#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "afford/dataspec.hpp"

namespace afford::synth {

enum class Scenario { Insertability, Graspability, Rollability };

Scenario scenario_from_name(const std::string& s);
std::string scenario_name(Scenario s);

// Deterministic closed-form generators. Same config + seed means bitwise
// identical datasets; per-sample sub-seeds are derived as seed ^ sample index
// so per-sample generation order is irrelevant. With noise = 0 trajectories
// equal their closed forms exactly. Test-split samples are always emitted
// noise-free (they double as ground truth) and once per object variant.
struct ScenarioConfig {
  Scenario scenario = Scenario::Insertability;
  std::uint64_t seed = 0;
  double noise = 0.02;              // i.i.d. Gaussian sigma, trajectories only
  std::size_t samples_per_object = 20;
  std::size_t t_steps = 100;
  std::size_t image_side = 32;
  bool cone_rolls = false;          // explicit rollability class toggle for the cone
  std::vector<std::string> shapes;  // rollability object filter; empty = full set
};

data::Dataset gen_insertability(const ScenarioConfig& cfg);
data::Dataset gen_graspability(const ScenarioConfig& cfg);
data::Dataset gen_rollability(const ScenarioConfig& cfg);
data::Dataset generate(const ScenarioConfig& cfg);

// Closed-form references used by the generators and by evaluation.
double min_jerk(double t);
// Rollability planar displacement magnitude at time t for a rolled /
// non-rolled outcome (0.1 m push, continuing to 0.4 m when rolling).
double roll_displacement(double t, bool rolled);
// Unit planar push direction ("straight" | "left" | "right").
void push_direction(const std::string& name, double& dx, double& dy);
// Whether a rollability object rolls when pushed in the given direction.
bool object_rolls(const std::string& shape_label, const std::string& direction,
                  bool cone_rolls);

const std::vector<std::string>& rollability_shapes();
const std::vector<std::string>& rollability_directions();

// Fixed joint-space start/end poses; distinct per (agent, action tag), shared
// across objects. Derives from a stable hash so they never change.
std::vector<double> action_pose(const std::string& agent, const std::string& tag,
                                std::size_t dim, bool end_pose);

}  // namespace afford::synth
