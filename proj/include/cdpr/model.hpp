#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace cdpr {

/// Planar vector in millimetres. Origin at the bottom-left corner of the
/// base frame, x right, y up.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

  double norm() const { return std::hypot(x, y); }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  /// z-component of the planar cross product.
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  bool finite() const { return std::isfinite(x) && std::isfinite(y); }

  friend Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Position of the end-effector centre. Orientation is fixed (identity).
struct Pose {
  Vec2 p;
  friend bool operator==(const Pose&, const Pose&) = default;
};

/// Per-cable lengths in mm, indexed like RobotDescription::anchors.
struct CableLengths {
  std::vector<double> l;

  std::size_t size() const { return l.size(); }
  double operator[](std::size_t i) const { return l[i]; }
  double& operator[](std::size_t i) { return l[i]; }
  friend bool operator==(const CableLengths&, const CableLengths&) = default;
};

struct RobotDescription {
  std::vector<Vec2> anchors;  // coiling-system output points, mm
  double ee_width = 0.0;      // mm
  double ee_height = 0.0;     // mm
  double ee_mass = 0.0;       // kg
  double gravity = 9.81;      // m/s^2
  double tension_min = 0.0;   // N
  double tension_max = 0.0;   // N
  int dof = 2;

  std::size_t cable_count() const { return anchors.size(); }
  double gravity_mmps2() const { return gravity * 1000.0; }

  /// Attachment point of cable i relative to the end-effector centre.
  ///
  /// Cables attach to the corner of the end-effector rectangle facing their
  /// anchor: the x side follows the anchor's position relative to the anchor
  /// centroid, the y side likewise, with anchors level with the centroid
  /// (the suspended case) attaching on top. For the planar two-cable robot
  /// this yields (-B_x/2, +B_y/2) for the left cable and (+B_x/2, +B_y/2)
  /// for the right one.
  Vec2 attachment(std::size_t i) const;

  friend bool operator==(const RobotDescription&, const RobotDescription&) = default;
};

struct Violation {
  enum class Severity { kWarning, kError };
  Severity severity = Severity::kError;
  std::string message;

  bool is_error() const { return severity == Severity::kError; }
};

/// 1500 mm square frame, 120 mm / 1 kg end effector, tensions in [0, 20] N.
RobotDescription reference_robot();

/// Every violated invariant; empty iff the description is fully valid.
std::vector<Violation> validate(const RobotDescription& desc);

/// Parse a robot-description JSON document. Unknown keys are rejected.
/// Throws ParseError or ValidationError (error-level violations only;
/// warnings are accepted).
RobotDescription robot_from_json(const std::string& text);
std::string robot_to_json(const RobotDescription& desc);

RobotDescription load_robot(const std::filesystem::path& path);
void save_robot(const RobotDescription& desc, const std::filesystem::path& path);

/// Stable 52-bit hash of the description, exactly representable as a double.
/// Exchanged in the HELLO handshake so controller and plant agree on geometry.
double robot_hash(const RobotDescription& desc);

}  // namespace cdpr
