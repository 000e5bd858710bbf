#include "cdpr/plant.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cdpr/error.hpp"
#include "cdpr/kinematics.hpp"

namespace cdpr {

namespace {

constexpr double kBlowupSpeed = 1e6;  // mm/s

TensionVector clamped_static_tensions(const RobotDescription& desc, const Pose& pose) {
  TensionVector t = solve_tensions(desc, pose);
  for (double& v : t.t) v = std::max(0.0, v);
  return t;
}

}  // namespace

void validate(const RobotDescription& desc, const PlantConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw ValidationError("dt must be > 0");
  if (!(cfg.stiffness > 0.0)) throw ValidationError("stiffness must be > 0");
  if (!(cfg.damping >= 0.0)) throw ValidationError("damping must be >= 0");
  if (!(cfg.axis_max_speed > 0.0)) throw ValidationError("axis_max_speed must be > 0");
  if (!(cfg.axis_time_constant > 0.0)) throw ValidationError("axis_time_constant must be > 0");
  if (!(desc.ee_mass > 0.0)) throw ValidationError("ee_mass must be > 0");
  // k in N/mm -> N/m for a rate in 1/s.
  const double omega = std::sqrt(static_cast<double>(desc.cable_count()) * cfg.stiffness *
                                 1000.0 / desc.ee_mass);
  if (!(cfg.dt < 2.0 / omega)) {
    throw ValidationError("dt must be < 2/omega = " + std::to_string(2.0 / omega) +
                          " s for a stable integration");
  }
}

PlantState init_state(const RobotDescription& desc, const Pose& start) {
  if (!start.p.finite()) throw ValidationError("start pose must be finite");
  PlantState s;
  s.p = start.p;
  s.axis = inverse_kinematics(desc, start);
  s.tensions = clamped_static_tensions(desc, start);
  return s;
}

PlantState step(const RobotDescription& desc, const PlantConfig& cfg, const PlantState& state,
                const CableLengths& commanded) {
  const std::size_t m = desc.cable_count();
  if (commanded.size() != m) throw ValidationError("command has wrong cable count");
  PlantState next = state;
  next.steps = state.steps + 1;
  next.t = static_cast<double>(next.steps) * cfg.dt;

  if (cfg.mode == PlantMode::kIdealKinematic) {
    next.axis = commanded;
    const Pose pose = m == 2 && desc.dof == 2
                          ? forward_kinematics_closed(desc, commanded)
                          : forward_kinematics_numeric(desc, commanded, Pose{state.p}).pose;
    next.p = pose.p;
    next.v = (pose.p - state.p) * (1.0 / cfg.dt);
    try {
      next.tensions = clamped_static_tensions(desc, pose);
    } catch (const DegenerateGeometry&) {
      next.tensions.t.assign(m, 0.0);
    }
    return next;
  }

  const double blend = 1.0 - std::exp(-cfg.dt / cfg.axis_time_constant);
  const double max_move = cfg.axis_max_speed * cfg.dt;
  std::vector<double> axis_rate(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double move = std::clamp((commanded[i] - state.axis[i]) * blend, -max_move, max_move);
    next.axis[i] = state.axis[i] + move;
    axis_rate[i] = move / cfg.dt;
  }

  Vec2 force;
  next.tensions.t.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const Vec2 to_anchor = desc.anchors[i] - (state.p + desc.attachment(i));
    const double dist = to_anchor.norm();
    const double stretch = dist - next.axis[i];
    if (stretch <= 0.0 || dist < kMinCableLength) continue;  // slack: no spring, no damper
    const Vec2 u = to_anchor * (1.0 / dist);
    const double stretch_rate = -u.dot(state.v) - axis_rate[i];
    const double tension = std::max(0.0, cfg.stiffness * stretch + cfg.damping * stretch_rate);
    next.tensions.t[i] = tension;
    force += u * tension;
  }

  // N / kg = m/s^2 -> mm/s^2.
  const Vec2 accel = force * (1000.0 / desc.ee_mass) - Vec2{0.0, desc.gravity_mmps2()};
  next.v = state.v + accel * cfg.dt;
  next.p = state.p + next.v * cfg.dt;
  if (!(next.v.norm() <= kBlowupSpeed)) {
    throw NumericalBlowup("plant speed exceeded 1e6 mm/s at t = " + std::to_string(next.t) + " s");
  }
  return next;
}

Measurement measure(const PlantState& state) {
  return {Pose{state.p}, state.axis, state.tensions, state.t};
}

double mechanical_energy(const RobotDescription& desc, const PlantConfig& cfg,
                         const PlantState& state) {
  // kg * (mm/s)^2 = 1e-6 J = 1e-3 N*mm
  const double kinetic = 0.5 * desc.ee_mass * state.v.dot(state.v) * 1e-3;
  const double potential = desc.ee_mass * desc.gravity * state.p.y;
  double spring = 0.0;
  for (std::size_t i = 0; i < desc.cable_count(); ++i) {
    const double stretch =
        (desc.anchors[i] - (state.p + desc.attachment(i))).norm() - state.axis[i];
    if (stretch > 0.0) spring += 0.5 * cfg.stiffness * stretch * stretch;
  }
  return kinetic + potential + spring;
}

const char* to_string(PlantMode mode) {
  return mode == PlantMode::kDynamic ? "dynamic" : "ideal";
}

PlantMode plant_mode_from_string(const std::string& s) {
  if (s == "dynamic") return PlantMode::kDynamic;
  if (s == "ideal" || s == "ideal-kinematic") return PlantMode::kIdealKinematic;
  throw ParseError("unknown plant mode '" + s + "' (expected dynamic or ideal)");
}

PlantConfig plant_config_from_json(const std::string& text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("plant config: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("plant config must be a JSON object");
  static const std::set<std::string> keys = {"dt_s",           "stiffness_n_per_mm",
                                             "damping_ns_per_mm", "axis_max_speed_mmps",
                                             "axis_time_constant_s", "mode"};
  PlantConfig cfg;
  for (const auto& [key, value] : doc.items()) {
    if (!keys.count(key)) throw ParseError("plant config: unknown key '" + key + "'");
    if (key == "mode") {
      if (!value.is_string()) throw ParseError("plant config: 'mode' must be a string");
      cfg.mode = plant_mode_from_string(value.get<std::string>());
      continue;
    }
    if (!value.is_number()) throw ParseError("plant config: '" + key + "' must be a number");
    const double v = value.get<double>();
    if (key == "dt_s") cfg.dt = v;
    else if (key == "stiffness_n_per_mm") cfg.stiffness = v;
    else if (key == "damping_ns_per_mm") cfg.damping = v;
    else if (key == "axis_max_speed_mmps") cfg.axis_max_speed = v;
    else cfg.axis_time_constant = v;
  }
  return cfg;
}

std::string plant_config_to_json(const PlantConfig& cfg) {
  nlohmann::json doc;
  doc["dt_s"] = cfg.dt;
  doc["stiffness_n_per_mm"] = cfg.stiffness;
  doc["damping_ns_per_mm"] = cfg.damping;
  doc["axis_max_speed_mmps"] = cfg.axis_max_speed;
  doc["axis_time_constant_s"] = cfg.axis_time_constant;
  doc["mode"] = to_string(cfg.mode);
  return doc.dump(2);
}

PlantConfig load_plant_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open plant config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return plant_config_from_json(ss.str());
}

}  // namespace cdpr
