#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "cdpr/model.hpp"

namespace cdpr {

/// Wrench the cables must supply: forces in N, then (dof = 3) moment in N*mm.
struct Wrench {
  Eigen::VectorXd components;
};

struct TensionVector {
  std::vector<double> t;  // N, indexed like the anchors

  std::size_t size() const { return t.size(); }
  double operator[](std::size_t i) const { return t[i]; }
  double max() const;
};

/// Relative singular-value threshold below which the structure matrix is
/// treated as rank deficient.
inline constexpr double kRankTolerance = 1e-10;

/// (0, m*g) in N (and a zero moment for dof = 3): the cables carry the weight.
Wrench gravity_wrench(const RobotDescription& desc);

/// Solves A(pose) * T = B.
///
/// For as many cables as degrees of freedom the solution is unique. With one
/// redundant cable the solutions form a line T_p + lambda * nu along the
/// nullspace of A; lambda is put at the centre of the interval that keeps all
/// tensions within [tension_min, tension_max], or, when that interval is
/// empty, where the worst bound violation is smallest.
///
/// Throws DegenerateGeometry for a zero-length cable or a rank-deficient A,
/// Unsupported for fewer cables than dof or more than dof + 1.
TensionVector solve_tensions(const RobotDescription& desc, const Pose& pose);

struct Feasibility {
  bool feasible = false;
  /// NaN entries when the pose is degenerate or unsolvable.
  TensionVector tensions;
};

/// Slack on the tension bounds so that roundoff on a bound (a vertical cable
/// leaves the other one at exactly zero) does not flip the verdict.
inline constexpr double kFeasibilityTolerance = 1e-9;  // N

/// Never throws; degenerate poses are simply infeasible.
Feasibility is_feasible(const RobotDescription& desc, const Pose& pose);

struct Range {
  double min = 0.0;
  double max = 0.0;
};

struct WorkspaceCell {
  bool feasible = false;
  double t_max = 0.0;          // N, NaN when degenerate
  std::vector<double> tensions;  // N, NaN when degenerate
};

/// Grid of is_feasible evaluations. Cells are stored row-major starting at
/// (origin.x, origin.y): index = row * cols + col, x = origin.x + col * spacing.
struct WorkspaceMap {
  Vec2 origin;
  double spacing = 0.0;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t cable_count = 0;
  std::vector<WorkspaceCell> cells;

  const WorkspaceCell& at(std::size_t col, std::size_t row) const { return cells[row * cols + col]; }
  Vec2 node(std::size_t col, std::size_t row) const {
    return {origin.x + static_cast<double>(col) * spacing,
            origin.y + static_cast<double>(row) * spacing};
  }
  std::size_t feasible_count() const;
  /// Feasible cell count times spacing^2, in mm^2.
  double feasible_area() const;
};

/// Evaluates every node min + k * spacing <= max of both ranges, frame
/// boundary included. An inverted range yields an empty map. Throws
/// ValidationError for a non-positive spacing.
WorkspaceMap workspace_scan(const RobotDescription& desc, Range x_range, Range y_range,
                            double spacing);

/// CSV: x_mm,y_mm,feasible,t_max_n,t1_n,...,tm_n with 6 significant digits.
void export_map(const WorkspaceMap& map, const std::filesystem::path& path);
std::string map_to_csv(const WorkspaceMap& map);

}  // namespace cdpr
