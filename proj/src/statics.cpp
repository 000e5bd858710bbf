#include "cdpr/statics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "cdpr/csv.hpp"
#include "cdpr/error.hpp"
#include "cdpr/kinematics.hpp"

namespace cdpr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Signed distance outside [lo, hi] of tension T_p + lambda * nu, maximised
// over cables; negative values are margins.
double worst_violation(const Eigen::VectorXd& tp, const Eigen::VectorXd& nu, double lambda,
                       double lo, double hi) {
  double worst = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < tp.size(); ++i) {
    const double t = tp[i] + lambda * nu[i];
    worst = std::max({worst, lo - t, t - hi});
  }
  return worst;
}

double pick_lambda(const Eigen::VectorXd& tp, const Eigen::VectorXd& nu, double lo, double hi) {
  constexpr double kFlat = 1e-14;
  double lam_lo = -std::numeric_limits<double>::infinity();
  double lam_hi = std::numeric_limits<double>::infinity();
  bool fixed_ok = true;
  for (Eigen::Index i = 0; i < tp.size(); ++i) {
    if (std::abs(nu[i]) <= kFlat) {
      if (tp[i] < lo || tp[i] > hi) fixed_ok = false;
      continue;
    }
    double a = (lo - tp[i]) / nu[i];
    double b = (hi - tp[i]) / nu[i];
    if (a > b) std::swap(a, b);
    lam_lo = std::max(lam_lo, a);
    lam_hi = std::min(lam_hi, b);
  }
  if (fixed_ok && lam_lo <= lam_hi && std::isfinite(lam_lo) && std::isfinite(lam_hi)) {
    return 0.5 * (lam_lo + lam_hi);
  }

  // Minimax of the affine violation lines: the optimum sits on a crossing of
  // two lines (or anywhere if every line is flat).
  std::vector<std::pair<double, double>> lines;  // (offset, slope)
  for (Eigen::Index i = 0; i < tp.size(); ++i) {
    lines.emplace_back(lo - tp[i], -nu[i]);
    lines.emplace_back(tp[i] - hi, nu[i]);
  }
  double best_lambda = 0.0;
  double best = worst_violation(tp, nu, 0.0, lo, hi);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      const double ds = lines[i].second - lines[j].second;
      if (std::abs(ds) <= kFlat) continue;
      const double lambda = (lines[j].first - lines[i].first) / ds;
      const double v = worst_violation(tp, nu, lambda, lo, hi);
      if (v < best || (v == best && lambda < best_lambda)) {
        best = v;
        best_lambda = lambda;
      }
    }
  }
  return best_lambda;
}

}  // namespace

double TensionVector::max() const {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : t) {
    if (std::isnan(v)) return kNaN;
    m = std::max(m, v);
  }
  return m;
}

Wrench gravity_wrench(const RobotDescription& desc) {
  const Eigen::Index n = desc.dof == 6 ? 6 : desc.dof;
  Wrench w{Eigen::VectorXd::Zero(n)};
  w.components[1] = desc.ee_mass * desc.gravity;
  return w;
}

TensionVector solve_tensions(const RobotDescription& desc, const Pose& pose) {
  const StructureMatrix a = structure_matrix(desc, pose);
  const Eigen::Index n = a.rows();
  const Eigen::Index m = a.cols();
  if (m < n) throw Unsupported("fewer cables than degrees of freedom");
  if (m > n + 1) throw Unsupported("more than one redundant cable");

  const Eigen::VectorXd b = gravity_wrench(desc).components;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.entries, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv[n - 1] <= kRankTolerance * sv[0]) {
    throw DegenerateGeometry("structure matrix is rank deficient at pose");
  }

  Eigen::VectorXd t = svd.solve(b);
  if (m == n + 1) {
    Eigen::VectorXd nu = svd.matrixV().col(n);
    // Fix the sign so the choice of lambda does not depend on the SVD.
    for (Eigen::Index i = 0; i < nu.size(); ++i) {
      if (std::abs(nu[i]) > 1e-14) {
        if (nu[i] < 0) nu = -nu;
        break;
      }
    }
    t += pick_lambda(t, nu, desc.tension_min, desc.tension_max) * nu;
  }
  return TensionVector{std::vector<double>(t.data(), t.data() + t.size())};
}

Feasibility is_feasible(const RobotDescription& desc, const Pose& pose) {
  Feasibility out;
  try {
    out.tensions = solve_tensions(desc, pose);
  } catch (const Error&) {
    out.tensions.t.assign(desc.cable_count(), kNaN);
    return out;
  }
  out.feasible = std::all_of(out.tensions.t.begin(), out.tensions.t.end(), [&](double t) {
    return t >= desc.tension_min - kFeasibilityTolerance &&
           t <= desc.tension_max + kFeasibilityTolerance;
  });
  return out;
}

std::size_t WorkspaceMap::feasible_count() const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [](const WorkspaceCell& c) { return c.feasible; }));
}

double WorkspaceMap::feasible_area() const {
  return static_cast<double>(feasible_count()) * spacing * spacing;
}

WorkspaceMap workspace_scan(const RobotDescription& desc, Range x_range, Range y_range,
                            double spacing) {
  if (!(spacing > 0.0) || !std::isfinite(spacing))
    throw ValidationError("spacing must be > 0");
  auto count = [&](const Range& r) -> std::size_t {
    if (!(r.max >= r.min)) return 0;
    return static_cast<std::size_t>(std::floor((r.max - r.min) / spacing + 1e-9)) + 1;
  };

  WorkspaceMap map;
  map.origin = {x_range.min, y_range.min};
  map.spacing = spacing;
  map.cols = count(x_range);
  map.rows = count(y_range);
  if (map.cols == 0 || map.rows == 0) map.cols = map.rows = 0;
  map.cable_count = desc.cable_count();
  map.cells.reserve(map.cols * map.rows);
  for (std::size_t row = 0; row < map.rows; ++row) {
    for (std::size_t col = 0; col < map.cols; ++col) {
      const Feasibility f = is_feasible(desc, Pose{map.node(col, row)});
      map.cells.push_back({f.feasible, f.tensions.max(), f.tensions.t});
    }
  }
  return map;
}

std::string map_to_csv(const WorkspaceMap& map) {
  std::ostringstream out;
  out << "x_mm,y_mm,feasible,t_max_n";
  for (std::size_t i = 1; i <= map.cable_count; ++i) out << ",t" << i << "_n";
  out << '\n';
  for (std::size_t row = 0; row < map.rows; ++row) {
    for (std::size_t col = 0; col < map.cols; ++col) {
      const Vec2 node = map.node(col, row);
      const WorkspaceCell& c = map.at(col, row);
      out << csv::g6(node.x) << ',' << csv::g6(node.y) << ',' << (c.feasible ? 1 : 0) << ','
          << csv::g6(c.t_max);
      for (double t : c.tensions) out << ',' << csv::g6(t);
      out << '\n';
    }
  }
  return out.str();
}

void export_map(const WorkspaceMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write map '" + path.string() + "'");
  out << map_to_csv(map);
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace cdpr
