#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cdpr/analysis.hpp"
#include "cdpr/csv.hpp"
#include "cdpr/error.hpp"
#include "cdpr/kinematics.hpp"
#include "cdpr/net/controller.hpp"
#include "cdpr/net/experiment.hpp"
#include "cdpr/net/gateway.hpp"
#include "cdpr/net/plant_server.hpp"
#include "cdpr/statics.hpp"
#include "cdpr/trajectory.hpp"

namespace cdpr::cli {

namespace {

namespace fs = std::filesystem;
using csv::g6;

constexpr const char* kPresetName = "paper-table-1-2";

struct RobotOpt {
  std::string path;

  void add(CLI::App* app) {
    app->add_option("--robot", path, "Robot description JSON (default: reference robot)")
        ->check(CLI::ExistingFile);
  }
  RobotDescription load() const { return path.empty() ? reference_robot() : load_robot(path); }
};

struct SquareOpt {
  double speed = 100.0;
  double side = 200.0;
  double center_x = 750.0;
  double center_y = 850.0;
  double accel = kDefaultAccel;
  std::string plan_path;

  void add(CLI::App* app, bool with_speed = true) {
    if (with_speed) app->add_option("--speed", speed, "Cruise speed in mm/s")->capture_default_str();
    app->add_option("--side", side, "Square side in mm")->capture_default_str();
    app->add_option("--center-x", center_x, "Square center x in mm")->capture_default_str();
    app->add_option("--center-y", center_y, "Square center y in mm")->capture_default_str();
    app->add_option("--accel", accel, "Acceleration in mm/s^2")->capture_default_str();
    app->add_option("--plan", plan_path, "Trajectory plan JSON (replaces the square)")
        ->check(CLI::ExistingFile);
  }
  TrajectoryPlan plan(double speed_override = 0.0) const {
    if (!plan_path.empty()) return load_plan(plan_path);
    return plan_square({center_x, center_y}, side, speed_override > 0 ? speed_override : speed,
                       accel);
  }
};

struct PlantOpt {
  std::string config_path;
  std::string mode;

  void add(CLI::App* app) {
    app->add_option("--plant-config", config_path, "Plant config JSON")->check(CLI::ExistingFile);
    app->add_option("--plant-mode", mode, "dynamic or ideal")
        ->check(CLI::IsMember({"dynamic", "ideal", "ideal-kinematic"}));
  }
  PlantConfig load() const {
    PlantConfig cfg = config_path.empty() ? PlantConfig{} : load_plant_config(config_path);
    if (!mode.empty()) cfg.mode = plant_mode_from_string(mode);
    return cfg;
  }
};

std::uint64_t resolve_seed(const CLI::Option* flag, std::uint64_t flag_value) {
  if (flag->count() > 0) return flag_value;
  if (const char* env = std::getenv("CDPR_SEED"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw ValidationError(std::string("CDPR_SEED is not an unsigned integer: '") + env + "'");
  }
  return kDefaultSeed;
}

std::string lengths_line(const CableLengths& l) {
  std::string s;
  for (std::size_t i = 0; i < l.l.size(); ++i) {
    if (i) s += ' ';
    s += "l" + std::to_string(i + 1) + "=" + g6(l.l[i]);
  }
  return s;
}

std::string tensions_line(const TensionVector& t) {
  std::string s;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i) s += ' ';
    s += "t" + std::to_string(i + 1) + "=" + g6(t[i]);
  }
  return s;
}

net::LoopLog run_local(const RobotDescription& robot, const PlantConfig& plant,
                       std::optional<net::GatewayConfig> gateway, const TrajectoryPlan& plan,
                       const net::ControllerOptions& opts) {
  net::Experiment exp;
  exp.robot = robot;
  exp.plant = plant;
  exp.gateway = gateway;
  exp.controller = opts;
  return net::run_experiment(exp, sample(plan, robot, opts.cycle));
}

analysis::AnalysisReport analyse_pair(const net::LoopLog& a, const net::LoopLog* b,
                                      const TrajectoryPlan& plan, analysis::Alignment al) {
  analysis::AnalysisReport rep;
  rep.delay_a = analysis::delay_report(a, al);
  rep.series_a = analysis::align(a, al);
  if (b != nullptr) {
    rep.delay_b = analysis::delay_report(*b, al);
    rep.series_b = analysis::align(*b, al);
    rep.errors = analysis::compare_logs(a, *b, analysis::horizontal_windows(plan),
                                        analysis::Axis::kY, al);
  }
  return rep;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cable-driven parallel robot toolkit", "cdpr"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  // ik
  auto* ik = app.add_subcommand("ik", "Cable lengths for an end-effector position");
  RobotOpt ik_robot;
  double ik_x = 0, ik_y = 0;
  ik_robot.add(ik);
  ik->add_option("--x", ik_x, "x in mm")->required();
  ik->add_option("--y", ik_y, "y in mm")->required();

  // fk
  auto* fk = app.add_subcommand("fk", "End-effector position from cable lengths");
  RobotOpt fk_robot;
  double fk_l1 = 0, fk_l2 = 0;
  std::vector<double> fk_lengths;
  bool fk_numeric = false;
  std::vector<double> fk_guess;
  fk_robot.add(fk);
  auto* o_l1 = fk->add_option("--l1", fk_l1, "Length of cable 1 in mm");
  auto* o_l2 = fk->add_option("--l2", fk_l2, "Length of cable 2 in mm");
  auto* o_lengths =
      fk->add_option("--lengths", fk_lengths, "All cable lengths, comma separated")->delimiter(',');
  o_lengths->excludes(o_l1)->excludes(o_l2);
  o_l1->needs(o_l2);
  o_l2->needs(o_l1);
  fk->add_flag("--numeric", fk_numeric, "Use the iterative solver (any cable count)");
  fk->add_option("--guess", fk_guess, "Initial guess x,y for --numeric")
      ->delimiter(',')
      ->expected(2);

  // tensions
  auto* tn = app.add_subcommand("tensions", "Static cable tensions and feasibility");
  RobotOpt tn_robot;
  double tn_x = 0, tn_y = 0;
  tn_robot.add(tn);
  tn->add_option("--x", tn_x, "x in mm")->required();
  tn->add_option("--y", tn_y, "y in mm")->required();

  // workspace
  auto* ws = app.add_subcommand("workspace", "Scan the static-equilibrium workspace");
  RobotOpt ws_robot;
  double ws_xmin = 0, ws_xmax = 1500, ws_ymin = 0, ws_ymax = 1500, ws_spacing = 10;
  std::string ws_out = "workspace.csv";
  ws_robot.add(ws);
  ws->add_option("--x-min", ws_xmin, "Grid x start in mm")->capture_default_str();
  ws->add_option("--x-max", ws_xmax, "Grid x end in mm")->capture_default_str();
  ws->add_option("--y-min", ws_ymin, "Grid y start in mm")->capture_default_str();
  ws->add_option("--y-max", ws_ymax, "Grid y end in mm")->capture_default_str();
  ws->add_option("--spacing", ws_spacing, "Grid spacing in mm")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  ws->add_option("--out", ws_out, "Map CSV path")->capture_default_str();

  // serve-plant
  auto* sp = app.add_subcommand("serve-plant", "Serve one controller session with the simulated plant");
  RobotOpt sp_robot;
  PlantOpt sp_plant;
  std::string sp_listen = "127.0.0.1:7001";
  sp_robot.add(sp);
  sp_plant.add(sp);
  sp->add_option("--listen", sp_listen, "host:port to listen on (port 0 picks one)")
      ->capture_default_str();

  // serve-gateway
  auto* sg = app.add_subcommand("serve-gateway", "Relay one session with injected delay and jitter");
  std::string sg_listen = "127.0.0.1:7000";
  std::string sg_upstream = "127.0.0.1:7001";
  double sg_delay = 0, sg_jitter = 0;
  std::uint64_t sg_seed = 0;
  sg->add_option("--listen", sg_listen, "host:port for the controller")->capture_default_str();
  sg->add_option("--upstream", sg_upstream, "Plant host:port")->capture_default_str();
  sg->add_option("--delay", sg_delay, "Base delay in ms")->check(CLI::NonNegativeNumber);
  sg->add_option("--jitter", sg_jitter, "Uniform jitter in +/- ms")->check(CLI::NonNegativeNumber);
  auto* sg_seed_opt = sg->add_option("--seed", sg_seed, "Jitter seed (default CDPR_SEED or 42)");

  // run-loop
  auto* rl = app.add_subcommand("run-loop", "Run a trajectory through the control loop");
  RobotOpt rl_robot;
  PlantOpt rl_plant;
  SquareOpt rl_square;
  bool rl_direct = false, rl_realtime = false;
  double rl_delay = 0, rl_jitter = 0, rl_cycle = kDefaultCycle, rl_tail = 0.5;
  std::uint64_t rl_seed = 0;
  std::string rl_out = "loop.csv", rl_endpoint, rl_preset, rl_out_dir = "preset";
  rl_robot.add(rl);
  rl_plant.add(rl);
  rl_square.add(rl);
  auto* o_direct = rl->add_flag("--direct", rl_direct, "Connect controller and plant without a gateway");
  auto* o_gd = rl->add_option("--gateway-delay", rl_delay, "Gateway base delay in ms")
                   ->check(CLI::NonNegativeNumber);
  auto* o_gj = rl->add_option("--gateway-jitter", rl_jitter, "Gateway jitter in +/- ms")
                   ->check(CLI::NonNegativeNumber);
  auto* rl_seed_opt = rl->add_option("--seed", rl_seed, "Gateway seed (default CDPR_SEED or 42)");
  rl->add_option("--cycle", rl_cycle, "Controller cycle in s")
      ->check(CLI::Range(0.001, 0.05))
      ->capture_default_str();
  rl->add_option("--tail", rl_tail, "Seconds to hold the final setpoint")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  rl->add_flag("--realtime", rl_realtime, "Wall-clock pacing instead of simulated time");
  rl->add_option("--out", rl_out, "LoopLog CSV path")->capture_default_str();
  auto* o_endpoint = rl->add_option(
      "--connect", rl_endpoint, "Use an already running plant or gateway at host:port");
  auto* o_preset = rl->add_option("--preset", rl_preset, "Named experiment")
                       ->check(CLI::IsMember({kPresetName}));
  rl->add_option("--out-dir", rl_out_dir, "Output directory for --preset")->capture_default_str();
  o_direct->excludes(o_gd)->excludes(o_gj);
  o_preset->excludes(o_direct)->excludes(o_gd)->excludes(o_gj)->excludes(o_endpoint);

  // analyze
  auto* an = app.add_subcommand("analyze", "Delay and position-error reports from loop logs");
  std::string an_a, an_b, an_out_dir = "report", an_alignment = "execution";
  SquareOpt an_square;
  an->add_option("--log-a", an_a, "First LoopLog CSV")->required()->check(CLI::ExistingFile);
  an->add_option("--log-b", an_b, "Second LoopLog CSV to compare against")
      ->check(CLI::ExistingFile);
  an_square.add(an);
  an->add_option("--alignment", an_alignment, "execution or received")
      ->check(CLI::IsMember({"execution", "received"}))
      ->capture_default_str();
  an->add_option("--out-dir", an_out_dir, "Report directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (ik->parsed()) {
      const auto robot = ik_robot.load();
      if (!Vec2{ik_x, ik_y}.finite()) throw ValidationError("position must be finite");
      out << lengths_line(inverse_kinematics(robot, Pose{{ik_x, ik_y}})) << '\n';
      return kExitOk;
    }

    if (fk->parsed()) {
      const auto robot = fk_robot.load();
      CableLengths l;
      if (o_l1->count() > 0) {
        l.l = {fk_l1, fk_l2};
      } else if (!fk_lengths.empty()) {
        l.l = fk_lengths;
      } else {
        throw ValidationError("give --l1/--l2 or --lengths");
      }
      if (l.l.size() != robot.cable_count())
        throw ValidationError("expected " + std::to_string(robot.cable_count()) + " lengths");
      Pose p;
      if (fk_numeric) {
        Pose guess{{0.0, 0.0}};
        if (fk_guess.size() == 2) {
          guess.p = {fk_guess[0], fk_guess[1]};
        } else {
          for (const auto& a : robot.anchors) guess.p += a;
          guess.p *= 1.0 / static_cast<double>(robot.cable_count());
          guess.p.y -= 500.0;
        }
        p = forward_kinematics_numeric(robot, l, guess).pose;
      } else {
        p = forward_kinematics_closed(robot, l);
      }
      out << "x=" << g6(p.p.x) << " y=" << g6(p.p.y) << '\n';
      return kExitOk;
    }

    if (tn->parsed()) {
      const auto robot = tn_robot.load();
      const Pose pose{{tn_x, tn_y}};
      const auto f = is_feasible(robot, pose);
      if (!f.feasible && !f.tensions.t.empty() && std::isnan(f.tensions[0])) {
        // Surface the reason (degenerate or unsupported geometry).
        solve_tensions(robot, pose);
      }
      out << tensions_line(f.tensions) << (f.feasible ? " feasible" : " infeasible") << '\n';
      return f.feasible ? kExitOk : kExitInfeasible;
    }

    if (ws->parsed()) {
      const auto robot = ws_robot.load();
      const auto map = workspace_scan(robot, {ws_xmin, ws_xmax}, {ws_ymin, ws_ymax}, ws_spacing);
      export_map(map, ws_out);
      out << "cells=" << map.cells.size() << " feasible=" << map.feasible_count()
          << " area_mm2=" << g6(map.feasible_area()) << " map=" << ws_out << '\n';
      return kExitOk;
    }

    if (sp->parsed()) {
      const auto robot = sp_robot.load();
      const auto cfg = sp_plant.load();
      const auto ep = net::Endpoint::parse(sp_listen);
      const auto summary = net::run_plant_server(robot, cfg, ep, [&](std::uint16_t port) {
        out << "listening on " << ep.host << ':' << port << std::endl;
      });
      out << "steps=" << summary.steps << " setpoints=" << summary.setpoints
          << " states=" << summary.states_sent << " clean_stop=" << summary.clean_stop << '\n';
      if (!summary.error.empty()) {
        err << "session error: " << summary.error << '\n';
        return kExitFailure;
      }
      return kExitOk;
    }

    if (sg->parsed()) {
      const net::GatewayConfig cfg{sg_delay, sg_jitter, resolve_seed(sg_seed_opt, sg_seed)};
      const auto ep = net::Endpoint::parse(sg_listen);
      const auto stats = net::run_gateway(ep, net::Endpoint::parse(sg_upstream), cfg,
                                          [&](std::uint16_t port) {
                                            out << "listening on " << ep.host << ':' << port
                                                << std::endl;
                                          });
      out << "to_plant=" << stats.to_plant << " to_controller=" << stats.to_controller << '\n';
      return kExitOk;
    }

    if (rl->parsed()) {
      const auto robot = rl_robot.load();
      const auto plant = rl_plant.load();
      const std::uint64_t seed = resolve_seed(rl_seed_opt, rl_seed);
      net::ControllerOptions opts;
      opts.cycle = rl_cycle;
      opts.tail_s = rl_tail;
      opts.mode = rl_realtime ? net::TimeMode::kRealTime : net::TimeMode::kSimulated;
      if (rl_endpoint.empty()) {
        validate(robot, plant);
        const double ratio = rl_cycle / plant.dt;
        if (std::abs(ratio - std::round(ratio)) > 1e-6)
          throw ValidationError("--cycle must be a whole multiple of the plant dt (" +
                                g6(plant.dt) + " s)");
      }

      if (!rl_preset.empty()) {
        fs::create_directories(rl_out_dir);
        for (const double speed : {100.0, 1000.0}) {
          const auto plan = rl_square.plan(speed);
          const auto tag = std::to_string(static_cast<int>(speed));
          const auto remote = run_local(robot, plant, net::GatewayConfig{120.0, 10.0, seed}, plan, opts);
          const auto local = run_local(robot, plant, net::GatewayConfig{20.0, 5.0, seed}, plan, opts);
          net::write_loop_log(remote, fs::path(rl_out_dir) / ("remote_" + tag + ".csv"));
          net::write_loop_log(local, fs::path(rl_out_dir) / ("local_" + tag + ".csv"));
          const auto rep = analyse_pair(remote, &local, plan, analysis::Alignment::kExecution);
          analysis::emit_report(rep, fs::path(rl_out_dir) / ("report_" + tag));
          out << "== " << tag << " mm/s: A = remote (120 +/- 10 ms), B = local (20 +/- 5 ms)\n"
              << analysis::report_text(rep) << '\n';
        }
        return kExitOk;
      }

      const auto plan = rl_square.plan();
      net::LoopLog log;
      if (!rl_endpoint.empty()) {
        log = net::run_controller(robot, plan, opts, net::Endpoint::parse(rl_endpoint), rl_out);
      } else {
        std::optional<net::GatewayConfig> gw;
        if (!rl_direct && (o_gd->count() > 0 || o_gj->count() > 0))
          gw = net::GatewayConfig{rl_delay, rl_jitter, seed};
        log = run_local(robot, plant, gw, plan, opts);
        net::write_loop_log(log, rl_out);
      }
      out << "records=" << log.records.size() << " truncated=" << log.truncated
          << " log=" << rl_out << '\n';
      return log.truncated ? kExitFailure : kExitOk;
    }

    if (an->parsed()) {
      const auto al = analysis::alignment_from_string(an_alignment);
      const auto a = net::read_loop_log(an_a);
      std::optional<net::LoopLog> b;
      if (!an_b.empty()) b = net::read_loop_log(an_b);
      const auto rep = analyse_pair(a, b ? &*b : nullptr, an_square.plan(), al);
      analysis::emit_report(rep, an_out_dir);
      out << analysis::report_text(rep);
      return kExitOk;
    }
  } catch (const NoSolution& e) {
    err << "no solution: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const NoConvergence& e) {
    err << "no convergence: " << e.what() << " (residual " << g6(e.residual()) << " mm)\n";
    return kExitInfeasible;
  } catch (const DegenerateGeometry& e) {
    err << "degenerate: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const DegenerateSignal& e) {
    err << "degenerate signal: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Unsupported& e) {
    err << "unsupported: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace cdpr::cli
