#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "cdpr/model.hpp"
#include "cdpr/statics.hpp"

namespace cdpr {

enum class PlantMode {
  /// Servo lag plus unilateral spring-damper cables driving a point mass.
  kDynamic,
  /// Ideal servos and rigid cables: the pose follows forward kinematics of
  /// the commanded lengths, tensions come from the static solve.
  kIdealKinematic,
};

struct PlantConfig {
  double dt = 0.001;                  // s
  double stiffness = 50.0;            // N/mm
  double damping = 0.5;               // N*s/mm
  double axis_max_speed = 2000.0;     // mm/s
  double axis_time_constant = 0.002;  // s
  PlantMode mode = PlantMode::kDynamic;

  friend bool operator==(const PlantConfig&, const PlantConfig&) = default;
};

struct PlantState {
  Vec2 p;              // mm
  Vec2 v;              // mm/s
  CableLengths axis;   // actual servo positions, mm
  TensionVector tensions;
  std::uint64_t steps = 0;
  double t = 0.0;      // s, always steps * dt

  friend bool operator==(const PlantState& a, const PlantState& b) {
    return a.p == b.p && a.v == b.v && a.axis == b.axis && a.tensions.t == b.tensions.t &&
           a.steps == b.steps && a.t == b.t;
  }
};

struct Measurement {
  Pose pose;
  CableLengths lengths;
  TensionVector tensions;
  double t = 0.0;
};

/// Throws ValidationError. Besides the sign constraints, enforces the explicit
/// integrator stability bound dt < 2 / omega, omega = sqrt(m * k / mass).
void validate(const RobotDescription& desc, const PlantConfig& cfg);

/// p = start, v = 0, axes at inverse_kinematics(start), tensions from the
/// static solve clamped at zero. Throws DegenerateGeometry for a start pose
/// with a zero-length cable.
PlantState init_state(const RobotDescription& desc, const Pose& start);

/// Advances the plant by cfg.dt with the axes driven toward `commanded`.
///
/// Dynamic mode: each axis follows a first-order lag rate-clamped to
/// axis_max_speed; cable i with stretch s = |a_i - (p + b_i)| - axis_i pulls
/// with max(0, k s + c ds/dt) when s > 0 and nothing otherwise; the point
/// mass is integrated with semi-implicit Euler. Throws NumericalBlowup when
/// |v| exceeds 1e6 mm/s.
PlantState step(const RobotDescription& desc, const PlantConfig& cfg, const PlantState& state,
                const CableLengths& commanded);

Measurement measure(const PlantState& state);

/// Kinetic + gravitational (y = 0 datum) + stored spring energy, in N*mm.
double mechanical_energy(const RobotDescription& desc, const PlantConfig& cfg,
                         const PlantState& state);

PlantConfig plant_config_from_json(const std::string& text);
std::string plant_config_to_json(const PlantConfig& cfg);
PlantConfig load_plant_config(const std::filesystem::path& path);

const char* to_string(PlantMode mode);
PlantMode plant_mode_from_string(const std::string& s);

}  // namespace cdpr
