#include "cdpr/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cdpr/error.hpp"
#include "cdpr/kinematics.hpp"

namespace cdpr {

TrapezoidalProfile::TrapezoidalProfile(double distance, double speed, double accel)
    : distance_(distance), accel_(accel) {
  const double ramp_distance = speed * speed / (2.0 * accel);
  triangular_ = 2.0 * ramp_distance >= distance;
  if (triangular_) {
    peak_speed_ = std::sqrt(accel * distance);
    ramp_time_ = peak_speed_ / accel;
    cruise_time_ = 0.0;
  } else {
    peak_speed_ = speed;
    ramp_time_ = speed / accel;
    cruise_time_ = (distance - 2.0 * ramp_distance) / speed;
  }
  duration_ = 2.0 * ramp_time_ + cruise_time_;
}

double TrapezoidalProfile::position(double t) const {
  if (t <= 0.0) return 0.0;
  if (t >= duration_) return distance_;
  if (t < ramp_time_) return 0.5 * accel_ * t * t;
  const double ramp_distance = 0.5 * accel_ * ramp_time_ * ramp_time_;
  if (t < ramp_time_ + cruise_time_) return ramp_distance + peak_speed_ * (t - ramp_time_);
  const double left = duration_ - t;
  return distance_ - 0.5 * accel_ * left * left;
}

double TrapezoidalProfile::speed(double t) const {
  if (t <= 0.0 || t >= duration_) return 0.0;
  if (t < ramp_time_) return accel_ * t;
  if (t < ramp_time_ + cruise_time_) return peak_speed_;
  return accel_ * (duration_ - t);
}

double TrajectoryPlan::duration() const { return breakpoints().back(); }

std::vector<double> TrajectoryPlan::breakpoints() const {
  std::vector<double> out{0.0};
  for (const auto& s : segments) out.push_back(out.back() + s.profile().duration());
  return out;
}

Pose TrajectoryPlan::pose_at(double t) const {
  if (segments.empty()) return {};
  double t0 = 0.0;
  for (const auto& s : segments) {
    const TrapezoidalProfile prof = s.profile();
    if (t < t0 + prof.duration()) {
      const double len = s.length();
      if (len == 0.0) return Pose{s.start};
      const double frac = prof.position(t - t0) / len;
      return Pose{s.start + (s.end - s.start) * frac};
    }
    t0 += prof.duration();
  }
  return Pose{segments.back().end};
}

void validate_plan(const TrajectoryPlan& plan) {
  if (plan.segments.empty()) throw ValidationError("plan has no segments");
  for (std::size_t k = 0; k < plan.segments.size(); ++k) {
    const Segment& s = plan.segments[k];
    if (!s.start.finite() || !s.end.finite())
      throw ValidationError("segment " + std::to_string(k) + " has non-finite points");
    if (!(s.speed > 0.0) || !std::isfinite(s.speed))
      throw ValidationError("segment speed must be > 0");
    if (!(s.accel > 0.0) || !std::isfinite(s.accel))
      throw ValidationError("segment acceleration must be > 0");
    if (k > 0 && !(plan.segments[k - 1].end == s.start))
      throw ValidationError("segments must be contiguous");
  }
}

TrajectoryPlan plan_line(Vec2 start, Vec2 end, double speed, double accel) {
  TrajectoryPlan plan{{Segment{start, end, speed, accel}}};
  validate_plan(plan);
  return plan;
}

TrajectoryPlan plan_square(Vec2 center, double side, double speed, double accel) {
  if (!(side > 0.0) || !std::isfinite(side)) throw ValidationError("square side must be > 0");
  const double h = side / 2.0;
  const Vec2 bl = center + Vec2{-h, -h};
  const Vec2 br = center + Vec2{h, -h};
  const Vec2 tr = center + Vec2{h, h};
  const Vec2 tl = center + Vec2{-h, h};
  TrajectoryPlan plan{{{bl, br, speed, accel},
                       {br, tr, speed, accel},
                       {tr, tl, speed, accel},
                       {tl, bl, speed, accel}}};
  validate_plan(plan);
  return plan;
}

std::vector<Setpoint> sample(const TrajectoryPlan& plan, const RobotDescription& desc,
                             double cycle) {
  if (!(cycle > 0.0)) throw ValidationError("cycle must be > 0");
  const double duration = plan.duration();
  const auto last = static_cast<long>(std::ceil(duration / cycle - 1e-9));
  std::vector<Setpoint> out;
  out.reserve(static_cast<std::size_t>(last) + 1);
  for (long k = 0; k <= last; ++k) {
    const double t = static_cast<double>(k) * cycle;
    const Pose pose = plan.pose_at(std::min(t, duration));
    out.push_back({t, pose, inverse_kinematics(desc, pose)});
  }
  return out;
}

std::vector<Setpoint> sample_sine(Vec2 center, Vec2 amplitude, double period, double duration,
                                  const RobotDescription& desc, double cycle) {
  if (!(cycle > 0.0) || !(period > 0.0) || !(duration >= 0.0))
    throw ValidationError("sine sampling needs cycle > 0, period > 0, duration >= 0");
  const auto last = static_cast<long>(std::floor(duration / cycle + 1e-9));
  std::vector<Setpoint> out;
  for (long k = 0; k <= last; ++k) {
    const double t = static_cast<double>(k) * cycle;
    const double s = std::sin(2.0 * std::numbers::pi * t / period);
    const Pose pose{center + Vec2{amplitude.x * s, amplitude.y * s}};
    out.push_back({t, pose, inverse_kinematics(desc, pose)});
  }
  return out;
}

namespace {

using nlohmann::json;

Vec2 point_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ParseError(std::string("plan: '") + what + "' must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

double number_or(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ParseError(std::string("plan: '") + key + "' must be a number");
  return j[key].get<double>();
}

}  // namespace

TrajectoryPlan plan_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("plan: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("plan must be a JSON object");
  static const std::set<std::string> keys = {"segments", "speed_mmps", "accel_mmps2"};
  for (const auto& [key, _] : doc.items()) {
    if (!keys.count(key)) throw ParseError("plan: unknown key '" + key + "'");
  }
  if (!doc.contains("speed_mmps")) throw ParseError("plan: missing 'speed_mmps'");
  const double speed = number_or(doc, "speed_mmps", 0.0);
  const double accel = number_or(doc, "accel_mmps2", kDefaultAccel);
  if (!doc.contains("segments") || !doc["segments"].is_array())
    throw ParseError("plan: 'segments' must be an array");

  static const std::set<std::string> seg_keys = {"start", "end", "speed_mmps", "accel_mmps2"};
  TrajectoryPlan plan;
  for (const auto& s : doc["segments"]) {
    if (!s.is_object()) throw ParseError("plan: each segment must be an object");
    for (const auto& [key, _] : s.items()) {
      if (!seg_keys.count(key)) throw ParseError("plan: unknown segment key '" + key + "'");
    }
    if (!s.contains("start") || !s.contains("end"))
      throw ParseError("plan: segment needs 'start' and 'end'");
    plan.segments.push_back({point_from(s["start"], "start"), point_from(s["end"], "end"),
                             number_or(s, "speed_mmps", speed),
                             number_or(s, "accel_mmps2", accel)});
  }
  validate_plan(plan);
  return plan;
}

std::string plan_to_json(const TrajectoryPlan& plan) {
  json doc;
  const double speed = plan.segments.empty() ? 0.0 : plan.segments.front().speed;
  const double accel = plan.segments.empty() ? kDefaultAccel : plan.segments.front().accel;
  doc["speed_mmps"] = speed;
  doc["accel_mmps2"] = accel;
  json segs = json::array();
  for (const auto& s : plan.segments) {
    json j;
    j["start"] = {s.start.x, s.start.y};
    j["end"] = {s.end.x, s.end.y};
    if (s.speed != speed) j["speed_mmps"] = s.speed;
    if (s.accel != accel) j["accel_mmps2"] = s.accel;
    segs.push_back(j);
  }
  doc["segments"] = segs;
  return doc.dump(2);
}

TrajectoryPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open plan '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return plan_from_json(ss.str());
}

void save_plan(const TrajectoryPlan& plan, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write plan '" + path.string() + "'");
  out << plan_to_json(plan) << '\n';
}

}  // namespace cdpr
