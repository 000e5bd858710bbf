#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cdpr/analysis.hpp"
#include "cdpr/error.hpp"
#include "cdpr/kinematics.hpp"
#include "cdpr/net/experiment.hpp"
#include "cdpr/plant.hpp"
#include "cdpr/statics.hpp"
#include "cdpr/trajectory.hpp"

namespace py = pybind11;
using namespace cdpr;

namespace {

Pose at(double x, double y) { return Pose{{x, y}}; }

py::dict delay_dict(const analysis::DelayEstimate& d) {
  py::dict out;
  out["delay_ms"] = d.delay_ms;
  out["lag_samples"] = d.lag_samples;
  out["peak"] = d.peak;
  out["anomaly"] = d.anomaly;
  return out;
}

}  // namespace

PYBIND11_MODULE(_cdpr, m) {
  m.doc() = "Cable-driven parallel robot toolkit";

  auto base = py::register_exception<Error>(m, "CdprError", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<NoSolution>(m, "NoSolution", base.ptr());
  py::register_exception<NoConvergence>(m, "NoConvergence", base.ptr());
  py::register_exception<DegenerateGeometry>(m, "DegenerateGeometry", base.ptr());
  py::register_exception<Unsupported>(m, "Unsupported", base.ptr());
  py::register_exception<NumericalBlowup>(m, "NumericalBlowup", base.ptr());
  py::register_exception<DegenerateSignal>(m, "DegenerateSignal", base.ptr());
  py::register_exception<ProtocolError>(m, "ProtocolError", base.ptr());
  py::register_exception<TransportError>(m, "TransportError", base.ptr());

  py::class_<Vec2>(m, "Vec2")
      .def(py::init<double, double>(), py::arg("x") = 0.0, py::arg("y") = 0.0)
      .def_readwrite("x", &Vec2::x)
      .def_readwrite("y", &Vec2::y)
      .def("norm", &Vec2::norm)
      .def("__iter__", [](const Vec2& v) { return py::iter(py::make_tuple(v.x, v.y)); })
      .def("__eq__", [](const Vec2& a, const Vec2& b) { return a == b; })
      .def("__repr__", [](const Vec2& v) {
        return "Vec2(" + std::to_string(v.x) + ", " + std::to_string(v.y) + ")";
      });

  py::class_<RobotDescription>(m, "RobotDescription")
      .def(py::init<>())
      .def_readwrite("anchors", &RobotDescription::anchors)
      .def_readwrite("ee_width", &RobotDescription::ee_width)
      .def_readwrite("ee_height", &RobotDescription::ee_height)
      .def_readwrite("ee_mass", &RobotDescription::ee_mass)
      .def_readwrite("gravity", &RobotDescription::gravity)
      .def_readwrite("tension_min", &RobotDescription::tension_min)
      .def_readwrite("tension_max", &RobotDescription::tension_max)
      .def_readwrite("dof", &RobotDescription::dof)
      .def_property_readonly("cable_count", &RobotDescription::cable_count)
      .def("attachment", &RobotDescription::attachment)
      .def("__eq__", [](const RobotDescription& a, const RobotDescription& b) { return a == b; });

  m.def("reference_robot", &reference_robot);
  m.def("validate_robot", [](const RobotDescription& d) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& v : validate(d))
      out.emplace_back(v.is_error() ? "error" : "warning", v.message);
    return out;
  });
  m.def("robot_from_json", &robot_from_json);
  m.def("robot_to_json", &robot_to_json);
  m.def("load_robot", [](const std::string& p) { return load_robot(p); });
  m.def("robot_hash", &robot_hash);

  m.def("inverse_kinematics",
        [](const RobotDescription& d, double x, double y) { return inverse_kinematics(d, at(x, y)).l; },
        py::arg("robot"), py::arg("x"), py::arg("y"));
  m.def("forward_kinematics",
        [](const RobotDescription& d, const std::vector<double>& l) {
          const Pose p = forward_kinematics_closed(d, CableLengths{l});
          return std::pair{p.p.x, p.p.y};
        },
        py::arg("robot"), py::arg("lengths"));
  m.def("forward_kinematics_numeric",
        [](const RobotDescription& d, const std::vector<double>& l, std::pair<double, double> g) {
          const auto r = forward_kinematics_numeric(d, CableLengths{l}, at(g.first, g.second));
          return std::tuple{r.pose.p.x, r.pose.p.y, r.residual, r.iterations};
        },
        py::arg("robot"), py::arg("lengths"), py::arg("guess"));

  m.def("solve_tensions",
        [](const RobotDescription& d, double x, double y) { return solve_tensions(d, at(x, y)).t; },
        py::arg("robot"), py::arg("x"), py::arg("y"));
  m.def("is_feasible",
        [](const RobotDescription& d, double x, double y) {
          const auto f = is_feasible(d, at(x, y));
          return std::pair{f.feasible, f.tensions.t};
        },
        py::arg("robot"), py::arg("x"), py::arg("y"));

  py::class_<WorkspaceMap>(m, "WorkspaceMap")
      .def_readonly("cols", &WorkspaceMap::cols)
      .def_readonly("rows", &WorkspaceMap::rows)
      .def_readonly("spacing", &WorkspaceMap::spacing)
      .def("feasible_count", &WorkspaceMap::feasible_count)
      .def("feasible_area", &WorkspaceMap::feasible_area)
      .def("feasible", [](const WorkspaceMap& w, std::size_t c, std::size_t r) {
        return w.at(c, r).feasible;
      })
      .def("node", [](const WorkspaceMap& w, std::size_t c, std::size_t r) { return w.node(c, r); })
      .def("to_csv", &map_to_csv);
  m.def("workspace_scan",
        [](const RobotDescription& d, std::pair<double, double> xr, std::pair<double, double> yr,
           double spacing) {
          return workspace_scan(d, {xr.first, xr.second}, {yr.first, yr.second}, spacing);
        },
        py::arg("robot"), py::arg("x_range"), py::arg("y_range"), py::arg("spacing"));

  py::class_<TrajectoryPlan>(m, "TrajectoryPlan")
      .def("duration", &TrajectoryPlan::duration)
      .def("breakpoints", &TrajectoryPlan::breakpoints)
      .def("pose_at", [](const TrajectoryPlan& p, double t) { return p.pose_at(t).p; })
      .def("to_json", [](const TrajectoryPlan& p) { return plan_to_json(p); })
      .def_property_readonly("segment_count",
                             [](const TrajectoryPlan& p) { return p.segments.size(); });
  m.def("plan_square",
        [](std::pair<double, double> c, double side, double speed, double accel) {
          return plan_square({c.first, c.second}, side, speed, accel);
        },
        py::arg("center"), py::arg("side"), py::arg("speed"), py::arg("accel") = kDefaultAccel);
  m.def("plan_from_json", &plan_from_json);
  m.def("sample",
        [](const TrajectoryPlan& plan, const RobotDescription& d, double cycle) {
          std::vector<std::tuple<double, double, double, std::vector<double>>> out;
          for (const auto& s : sample(plan, d, cycle))
            out.emplace_back(s.t, s.pose.p.x, s.pose.p.y, s.lengths.l);
          return out;
        },
        py::arg("plan"), py::arg("robot"), py::arg("cycle") = kDefaultCycle);

  py::class_<PlantConfig>(m, "PlantConfig")
      .def(py::init<>())
      .def_readwrite("dt", &PlantConfig::dt)
      .def_readwrite("stiffness", &PlantConfig::stiffness)
      .def_readwrite("damping", &PlantConfig::damping)
      .def_readwrite("axis_max_speed", &PlantConfig::axis_max_speed)
      .def_readwrite("axis_time_constant", &PlantConfig::axis_time_constant)
      .def_property(
          "mode", [](const PlantConfig& c) { return std::string(to_string(c.mode)); },
          [](PlantConfig& c, const std::string& s) { c.mode = plant_mode_from_string(s); });

  py::class_<PlantState>(m, "PlantState")
      .def_readonly("p", &PlantState::p)
      .def_readonly("v", &PlantState::v)
      .def_property_readonly("axis", [](const PlantState& s) { return s.axis.l; })
      .def_property_readonly("tensions", [](const PlantState& s) { return s.tensions.t; })
      .def_readonly("steps", &PlantState::steps)
      .def_readonly("t", &PlantState::t);
  m.def("init_state", [](const RobotDescription& d, double x, double y) { return init_state(d, at(x, y)); },
        py::arg("robot"), py::arg("x"), py::arg("y"));
  m.def("step",
        [](const RobotDescription& d, const PlantConfig& c, const PlantState& s,
           const std::vector<double>& cmd) { return step(d, c, s, CableLengths{cmd}); },
        py::arg("robot"), py::arg("config"), py::arg("state"), py::arg("command"));
  m.def("mechanical_energy", &mechanical_energy);

  py::class_<net::LoopLog>(m, "LoopLog")
      .def_readonly("truncated", &net::LoopLog::truncated)
      .def("__len__", [](const net::LoopLog& l) { return l.records.size(); })
      .def("to_csv", [](const net::LoopLog& l) { return net::loop_log_to_csv(l); });
  m.def("loop_log_from_csv", &net::loop_log_from_csv);
  m.def("run_experiment",
        [](const RobotDescription& d, const TrajectoryPlan& plan, const PlantConfig& cfg,
           std::optional<std::tuple<double, double, std::uint64_t>> gateway, double cycle,
           double tail) {
          net::Experiment e;
          e.robot = d;
          e.plant = cfg;
          if (gateway) {
            const auto [delay, jitter, seed] = *gateway;
            e.gateway = net::GatewayConfig{delay, jitter, seed};
          }
          e.controller.cycle = cycle;
          e.controller.tail_s = tail;
          py::gil_scoped_release release;
          return net::run_experiment(e, sample(plan, d, cycle));
        },
        py::arg("robot"), py::arg("plan"), py::arg("config") = PlantConfig{},
        py::arg("gateway") = py::none(), py::arg("cycle") = kDefaultCycle, py::arg("tail") = 0.5);

  m.def("estimate_delay",
        [](const std::vector<double>& target, const std::vector<double>& measured, double cycle) {
          return delay_dict(analysis::estimate_delay(target, measured, cycle));
        },
        py::arg("target"), py::arg("measured"), py::arg("cycle"));
  m.def("delay_report",
        [](const net::LoopLog& log, const std::string& alignment) {
          py::list out;
          for (const auto& d :
               analysis::delay_report(log, analysis::alignment_from_string(alignment)).axes)
            out.append(delay_dict(d));
          return out;
        },
        py::arg("log"), py::arg("alignment") = "execution");
  m.def("error_from_means", [](double target, double measured) {
    return analysis::error_from_means(target, measured).error_pct;
  });
}
