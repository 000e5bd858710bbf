#pragma once

#include <Eigen/Core>

#include "cdpr/model.hpp"

namespace cdpr {

/// Maps cable tensions to the wrench on the end effector (A = -J^T).
///
/// Column i stacks the unit vector u_i, pointing from the attachment point
/// toward anchor i, on top of the moment term b_i x u_i (dof = 3 only).
/// Rows = dof, columns = cable_count.
struct StructureMatrix {
  Eigen::MatrixXd entries;

  Eigen::Index rows() const { return entries.rows(); }
  Eigen::Index cols() const { return entries.cols(); }
  Vec2 unit(Eigen::Index cable) const { return {entries(0, cable), entries(1, cable)}; }
};

/// Cables shorter than this are treated as coincident with their anchor.
inline constexpr double kMinCableLength = 1e-9;

CableLengths inverse_kinematics(const RobotDescription& desc, const Pose& pose);

/// Closed-form forward kinematics for the planar two-cable robot.
///
/// Intersects the two cable circles and keeps the lower intersection, the
/// only one reachable by a suspended end effector. Throws Unsupported when
/// the robot is not a planar two-cable robot with level anchors, and
/// NoSolution when the lengths are geometrically inconsistent.
Pose forward_kinematics_closed(const RobotDescription& desc, const CableLengths& lengths);

struct NumericFkResult {
  Pose pose;
  int iterations = 0;
  double residual = 0.0;  // max-norm of length residuals, mm
};

/// Gauss-Newton least squares on r_i = |a_i - (p + b_i)| - l_i with step
/// halving. Works for any cable count; used as an oracle for the closed form.
/// Throws NoConvergence (carrying the final residual) after 100 iterations
/// or when no step reduces the residual.
NumericFkResult forward_kinematics_numeric(const RobotDescription& desc,
                                           const CableLengths& lengths, const Pose& guess);

/// Throws DegenerateGeometry when a cable is shorter than kMinCableLength,
/// Unsupported for dof = 6 (planar descriptions carry no spatial geometry).
StructureMatrix structure_matrix(const RobotDescription& desc, const Pose& pose);

}  // namespace cdpr
