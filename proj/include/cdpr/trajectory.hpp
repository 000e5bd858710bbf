#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cdpr/model.hpp"

namespace cdpr {

/// Rest-to-rest trapezoidal speed profile along a path of given length.
/// Degrades to a triangle when the cruise speed cannot be reached.
class TrapezoidalProfile {
 public:
  TrapezoidalProfile(double distance, double speed, double accel);

  double duration() const { return duration_; }
  double ramp_time() const { return ramp_time_; }
  double peak_speed() const { return peak_speed_; }
  bool triangular() const { return triangular_; }

  /// Distance travelled at time t, clamped to [0, distance].
  double position(double t) const;
  double speed(double t) const;

 private:
  double distance_;
  double accel_;
  double peak_speed_;
  double ramp_time_;
  double cruise_time_;
  double duration_;
  bool triangular_;
};

struct Segment {
  Vec2 start;
  Vec2 end;
  double speed = 0.0;  // mm/s
  double accel = 0.0;  // mm/s^2

  double length() const { return (end - start).norm(); }
  TrapezoidalProfile profile() const { return {length(), speed, accel}; }
};

/// Contiguous straight segments, each starting and ending at rest.
struct TrajectoryPlan {
  std::vector<Segment> segments;

  double duration() const;
  /// Start time of each segment followed by the total duration.
  std::vector<double> breakpoints() const;
  Pose pose_at(double t) const;
};

struct Setpoint {
  double t = 0.0;  // s
  Pose pose;
  CableLengths lengths;
};

inline constexpr double kDefaultAccel = 2000.0;  // mm/s^2
inline constexpr double kDefaultCycle = 0.01;    // s

/// Throws ValidationError for non-finite or non-positive parameters and for
/// non-contiguous segments.
void validate_plan(const TrajectoryPlan& plan);

TrajectoryPlan plan_line(Vec2 start, Vec2 end, double speed, double accel);

/// Counter-clockwise square starting at the bottom-left corner; one segment
/// per side with a full stop at each corner.
TrajectoryPlan plan_square(Vec2 center, double side, double speed, double accel);

/// Setpoints at t = k * cycle until the plan ends; the last one sits exactly
/// on the final point. Each carries inverse_kinematics of its pose.
std::vector<Setpoint> sample(const TrajectoryPlan& plan, const RobotDescription& desc,
                             double cycle);

/// p(t) = center + amplitude * sin(2 pi t / period), for duration seconds.
std::vector<Setpoint> sample_sine(Vec2 center, Vec2 amplitude, double period, double duration,
                                  const RobotDescription& desc, double cycle);

/// JSON: {"speed_mmps", "accel_mmps2", "segments": [{"start": [x, y], "end": [x, y]}]}
/// with optional per-segment "speed_mmps"/"accel_mmps2" overrides.
TrajectoryPlan plan_from_json(const std::string& text);
std::string plan_to_json(const TrajectoryPlan& plan);
TrajectoryPlan load_plan(const std::filesystem::path& path);
void save_plan(const TrajectoryPlan& plan, const std::filesystem::path& path);

}  // namespace cdpr
