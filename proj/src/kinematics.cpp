#include "cdpr/kinematics.hpp"

#include <Eigen/Dense>
#include <string>

#include "cdpr/error.hpp"

namespace cdpr {

namespace {

constexpr double kFkTolerance = 1e-9;
constexpr int kFkMaxIterations = 100;
constexpr int kFkMaxHalvings = 20;

Eigen::VectorXd residuals(const RobotDescription& desc, const CableLengths& lengths,
                          const Vec2& p) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(desc.cable_count()));
  for (std::size_t i = 0; i < desc.cable_count(); ++i) {
    r[static_cast<Eigen::Index>(i)] =
        (desc.anchors[i] - (p + desc.attachment(i))).norm() - lengths[i];
  }
  return r;
}

}  // namespace

CableLengths inverse_kinematics(const RobotDescription& desc, const Pose& pose) {
  CableLengths out;
  out.l.reserve(desc.cable_count());
  for (std::size_t i = 0; i < desc.cable_count(); ++i) {
    out.l.push_back((desc.anchors[i] - (pose.p + desc.attachment(i))).norm());
  }
  return out;
}

Pose forward_kinematics_closed(const RobotDescription& desc, const CableLengths& lengths) {
  if (desc.cable_count() != 2 || desc.dof != 2)
    throw Unsupported("closed-form forward kinematics needs the planar 2-cable robot");
  if (lengths.size() != 2) throw NoSolution("expected 2 cable lengths");
  const Vec2 b1 = desc.attachment(0);
  const Vec2 b2 = desc.attachment(1);
  if (desc.anchors[0].y != desc.anchors[1].y || b1.y != b2.y)
    throw Unsupported("closed-form forward kinematics needs level anchors");

  // Anchors shifted into the frame of the end-effector centre. For the
  // reference geometry e1 = A1x + Bx/2 and e2 = A2x - Bx/2, which expands to
  // p_x = (A1x^2 - A2x^2 + Bx A1x + Bx A2x - l1^2 + l2^2) / (2 (A1x - A2x + Bx)).
  const double e1 = desc.anchors[0].x - b1.x;
  const double e2 = desc.anchors[1].x - b2.x;
  const double l1 = lengths[0];
  const double l2 = lengths[1];
  if (e1 == e2) throw NoSolution("cable exits coincide; x is undetermined");

  const double px = (l1 * l1 - l2 * l2 - e1 * e1 + e2 * e2) / (2.0 * (e2 - e1));
  const double disc = l1 * l1 - (px - e1) * (px - e1);
  if (!(disc >= 0.0)) {
    throw NoSolution("cable lengths are geometrically inconsistent (discriminant " +
                     std::to_string(disc) + ")");
  }
  const double py = desc.anchors[0].y - std::sqrt(disc) - b1.y;
  return Pose{{px, py}};
}

NumericFkResult forward_kinematics_numeric(const RobotDescription& desc,
                                           const CableLengths& lengths, const Pose& guess) {
  if (lengths.size() != desc.cable_count()) throw NoSolution("length count mismatch");
  Vec2 p = guess.p;
  Eigen::VectorXd r = residuals(desc, lengths, p);
  double cost = r.squaredNorm();

  for (int it = 0; it <= kFkMaxIterations; ++it) {
    if (r.lpNorm<Eigen::Infinity>() < kFkTolerance) {
      return {Pose{p}, it, r.lpNorm<Eigen::Infinity>()};
    }
    if (it == kFkMaxIterations) break;

    // dr_i/dp = (p + b_i - a_i) / |.|
    Eigen::MatrixXd jac(r.size(), 2);
    for (std::size_t i = 0; i < desc.cable_count(); ++i) {
      Vec2 d = p + desc.attachment(i) - desc.anchors[i];
      const double n = d.norm();
      if (n > 0.0) d *= 1.0 / n;
      jac(static_cast<Eigen::Index>(i), 0) = d.x;
      jac(static_cast<Eigen::Index>(i), 1) = d.y;
    }
    const Eigen::Vector2d step = jac.completeOrthogonalDecomposition().solve(-r);

    double scale = 1.0;
    bool improved = false;
    for (int h = 0; h <= kFkMaxHalvings; ++h, scale *= 0.5) {
      const Vec2 trial = p + Vec2{step[0], step[1]} * scale;
      Eigen::VectorXd rt = residuals(desc, lengths, trial);
      if (rt.squaredNorm() < cost) {
        p = trial;
        r = std::move(rt);
        cost = r.squaredNorm();
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  const double res = r.lpNorm<Eigen::Infinity>();
  throw NoConvergence("numeric forward kinematics did not converge (residual " +
                          std::to_string(res) + " mm)",
                      res);
}

StructureMatrix structure_matrix(const RobotDescription& desc, const Pose& pose) {
  if (desc.dof == 6) throw Unsupported("dof = 6 needs spatial anchors; planar only");
  const auto m = static_cast<Eigen::Index>(desc.cable_count());
  StructureMatrix a{Eigen::MatrixXd::Zero(desc.dof, m)};
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const Vec2 b = desc.attachment(idx);
    const Vec2 d = desc.anchors[idx] - (pose.p + b);
    const double len = d.norm();
    if (len < kMinCableLength) {
      throw DegenerateGeometry("cable " + std::to_string(i + 1) + " has zero length at pose");
    }
    const Vec2 u = d * (1.0 / len);
    a.entries(0, i) = u.x;
    a.entries(1, i) = u.y;
    if (desc.dof == 3) a.entries(2, i) = b.cross(u);
  }
  return a;
}

}  // namespace cdpr
