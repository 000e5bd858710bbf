// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <thread>

#include "cdpr/analysis.hpp"
#include "cdpr/error.hpp"
#include "cdpr/kinematics.hpp"
#include "cdpr/net/experiment.hpp"
#include "cdpr/plant.hpp"
#include "cdpr/statics.hpp"
#include "cdpr/trajectory.hpp"

using namespace cdpr;

namespace {

const RobotDescription kRef = reference_robot();

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char* f, double a) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome kinematics() {
  Outcome o;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> x(100, 1400), y(100, 1300);
  double round_trip = 0, vs_numeric = 0;
  for (int k = 0; k < 1000; ++k) {
    const Pose p{{x(rng), y(rng)}};
    const auto l = inverse_kinematics(kRef, p);
    const auto c = forward_kinematics_closed(kRef, l);
    const auto n = forward_kinematics_numeric(kRef, l, Pose{{750, 700}});
    round_trip = std::max({round_trip, std::abs(c.p.x - p.p.x), std::abs(c.p.y - p.p.y)});
    vs_numeric = std::max({vs_numeric, std::abs(c.p.x - n.pose.p.x), std::abs(c.p.y - n.pose.p.y)});
  }
  o.require(round_trip < 1e-9, "round trip");
  o.require(vs_numeric < 1e-6, "closed vs numeric");
  o.note(fmt("max |FK(IK(p)) - p| = %.3g mm, closed vs Newton %.3g mm", round_trip, vs_numeric));
  return o;
}

Outcome statics() {
  Outcome o;
  const auto t = solve_tensions(kRef, Pose{{750, 750}});
  const double expected = kRef.ee_mass * kRef.gravity / (2.0 * std::sin(M_PI / 4));
  o.require(std::abs(t[0] - 6.9367) <= 1e-3 && std::abs(t[1] - 6.9367) <= 1e-3, "T at (750,750)");
  o.require(std::abs(t[0] - expected) < 1e-12 && std::abs(t[1] - expected) < 1e-12,
            "symmetric balance");

  auto heavy = kRef;
  heavy.ee_mass *= 2.0;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> x(0, 1500), y(0, 1500);
  int poses = 0;
  double residual = 0, scaling = 0;
  const Wrench b = gravity_wrench(kRef);
  while (poses < 10000) {
    const Pose p{{x(rng), y(rng)}};
    const auto f = is_feasible(kRef, p);
    if (!f.feasible) continue;
    ++poses;
    const auto a = structure_matrix(kRef, p);
    Eigen::Vector2d tv(f.tensions[0], f.tensions[1]);
    residual = std::max(residual, (a.entries * tv - b.components).cwiseAbs().maxCoeff());
    const auto h = solve_tensions(heavy, p);
    for (std::size_t i = 0; i < 2; ++i)
      scaling = std::max(scaling, std::abs(h[i] - 2.0 * f.tensions[i]) / std::abs(h[i]));
  }
  o.require(residual < 1e-9, "residual");
  o.require(scaling <= 1e-12, "mass scaling");
  o.note(fmt("T = %.4f N; residual %.3g N over 10000 feasible poses", t[0], residual));
  o.note(fmt("mass x2 relative error %.3g", scaling));
  return o;
}

// A log whose target and measured y hold `upper` for the first half and
// `lower` for the second.
net::LoopLog constant_log(std::pair<double, double> upper, std::pair<double, double> lower) {
  net::LoopLog log;
  log.cable_count = 2;
  for (int k = 0; k < 200; ++k) {
    const auto& m = k < 100 ? upper : lower;
    net::LoopRecord r;
    r.t_us = k * 10000;
    r.target = {750, m.first};
    r.measured = {750, m.second};
    r.cmd = inverse_kinematics(kRef, Pose{r.target}).l;
    r.measured_l = inverse_kinematics(kRef, Pose{r.measured}).l;
    r.tensions = {0, 0};
    log.records.push_back(r);
  }
  return log;
}

Outcome error_formula() {
  Outcome o;
  const std::vector<analysis::TimeWindow> windows = {{0.1, 0.9, "upper"}, {1.1, 1.9, "lower"}};
  struct Speed {
    net::LoopLog sim, proto;
    double err[4];   // sim upper, sim lower, proto upper, proto lower
    double diff[2];  // upper, lower
  };
  const Speed speeds[] = {
      {constant_log({947.613, 946.016}, {749.578, 750.183}),
       constant_log({947.613, 948.670}, {749.582, 748.844}),
       {0.168, 0.081, 0.112, 0.098},
       {0.057, -0.017}},
      {constant_log({948.046, 945.437}, {749.594, 750.510}),
       constant_log({948.035, 945.879}, {749.600, 746.090}),
       {0.275, 0.122, 0.227, 0.468},
       {0.048, -0.346}},
  };
  double worst = 0;
  for (const auto& s : speeds) {
    const double e[4] = {
        analysis::segment_error(s.sim, analysis::Axis::kY, windows[0]).error_pct,
        analysis::segment_error(s.sim, analysis::Axis::kY, windows[1]).error_pct,
        analysis::segment_error(s.proto, analysis::Axis::kY, windows[0]).error_pct,
        analysis::segment_error(s.proto, analysis::Axis::kY, windows[1]).error_pct};
    for (int i = 0; i < 4; ++i) worst = std::max(worst, std::abs(e[i] - s.err[i]));
    const auto rep = analysis::compare_logs(s.sim, s.proto, windows);
    for (int i = 0; i < 2; ++i) {
      worst = std::max(worst, std::abs(rep.rows[static_cast<std::size_t>(i)].difference_pct - s.diff[i]));
    }
  }
  o.require(worst <= 1e-3, "within 0.001 points");
  o.note(fmt("8 errors and 4 differences, worst deviation %.2g percentage points", worst));
  return o;
}

net::Experiment square_experiment(PlantMode mode, std::optional<net::GatewayConfig> gw) {
  net::Experiment e;
  e.robot = kRef;
  e.plant.mode = mode;
  e.gateway = gw;
  e.controller.tail_s = 0.5;
  return e;
}

const TrajectoryPlan& square_plan(double speed) {
  static const TrajectoryPlan slow = plan_square({750, 850}, 200, 100, kDefaultAccel);
  static const TrajectoryPlan fast = plan_square({750, 850}, 200, 1000, kDefaultAccel);
  return speed < 500 ? slow : fast;
}

Outcome delay_recovery() {
  Outcome o;
  const auto sp = sample(square_plan(100), kRef, kDefaultCycle);
  struct Case {
    double base, jitter, lo, hi;
  };
  for (const Case c : {Case{120, 10, 110, 140}, Case{20, 5, 15, 30}}) {
    const auto log = net::run_experiment(
        square_experiment(PlantMode::kDynamic, net::GatewayConfig{c.base, c.jitter, 42}), sp);
    const auto rep = analysis::delay_report(log);
    std::string axes;
    for (std::size_t i = 0; i < rep.axes.size(); ++i) {
      const double d = rep.axes[i].delay_ms;
      o.require(d >= c.lo && d <= c.hi && !rep.axes[i].anomaly,
                fmt("axis in [%g, %g] ms", c.lo, c.hi));
      axes += (i ? "/" : "") + fmt("%.1f", d);
    }
    o.note(fmt("%g+/-%g ms -> ", c.base, c.jitter) + axes + " ms");
  }
  return o;
}

Outcome tracking() {
  Outcome o;
  for (const double speed : {100.0, 1000.0}) {
    const auto& plan = square_plan(speed);
    const auto sp = sample(plan, kRef, kDefaultCycle);
    const auto dyn = net::run_experiment(square_experiment(PlantMode::kDynamic, {}), sp);
    const auto ideal = net::run_experiment(square_experiment(PlantMode::kIdealKinematic, {}), sp);
    double worst_pct = 0;
    for (const auto& w : analysis::horizontal_windows(plan)) {
      const auto d = analysis::segment_error(dyn, analysis::Axis::kY, w);
      const auto i = analysis::segment_error(ideal, analysis::Axis::kY, w);
      worst_pct = std::max(worst_pct,
                           analysis::error_from_means(i.mean_measured, d.mean_measured).error_pct);
    }
    double worst_mm = 0;
    for (std::size_t k = 0; k < dyn.records.size(); ++k)
      worst_mm = std::max(worst_mm, (dyn.records[k].measured - ideal.records[k].measured).norm());
    const double limit = speed < 500 ? 0.5 : 1.0;
    o.require(worst_pct < limit, fmt("segment error < %g%% at %g mm/s", limit, speed));
    o.require(worst_mm < 5.52, fmt("deviation < 5.52 mm at %g mm/s", speed));
    o.note(fmt("%g mm/s: ", speed) + fmt("segment error %.3f%%, max deviation %.3f mm", worst_pct,
                                         worst_mm));
  }
  return o;
}

double stretch(const PlantState& s, std::size_t i) {
  return (kRef.anchors[i] - (s.p + kRef.attachment(i))).norm() - s.axis[i];
}

Outcome plant_properties() {
  Outcome o;
  const PlantConfig cfg;

  // Unilateral tension under randomized commands.
  auto random_walk = [&](std::uint64_t seed, int steps, bool check) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> delta(-30, 30);
    auto s = init_state(kRef, Pose{{750, 750}});
    const auto home = s.axis;
    int slack_pulls = 0, negative = 0;
    for (int k = 0; k < steps; ++k) {
      auto cmd = home;
      for (auto& l : cmd.l) l += delta(rng);
      const auto prev = s;
      s = step(kRef, cfg, s, cmd);
      if (!check) continue;
      for (std::size_t i = 0; i < 2; ++i) {
        if (s.tensions[i] < 0) ++negative;
        PlantState probe = prev;
        probe.axis = s.axis;
        if (stretch(probe, i) <= 0 && s.tensions[i] != 0) ++slack_pulls;
      }
    }
    return std::tuple{s, slack_pulls, negative};
  };
  const auto [final_a, slack_pulls, negative] = random_walk(7, 10000, true);
  o.require(slack_pulls == 0 && negative == 0, "unilateral tension");

  // Energy under constant commands, released from rest.
  int gains = 0;
  for (const Vec2 p : {Vec2{750, 750}, Vec2{500, 900}, Vec2{1100, 400}, Vec2{300, 1200}}) {
    auto s = init_state(kRef, Pose{p});
    const auto cmd = s.axis;
    double e = mechanical_energy(kRef, cfg, s);
    for (int k = 0; k < 5000; ++k) {
      s = step(kRef, cfg, s, cmd);
      const double next = mechanical_energy(kRef, cfg, s);
      if (next > e + 1e-9 * std::abs(e)) ++gains;
      e = next;
    }
  }
  o.require(gains == 0, "energy non-increase");

  // Settling.
  auto s = init_state(kRef, Pose{{750, 750}});
  const auto cmd = inverse_kinematics(kRef, Pose{{750, 750}});
  for (int k = 0; k < 2000; ++k) s = step(kRef, cfg, s, cmd);
  const double settle = (s.p - Vec2{750, 750}).norm();
  o.require(settle < 1.0, "settling");

  // Replay.
  const auto [final_b, unused1, unused2] = random_walk(7, 10000, false);
  o.require(final_a == final_b, "bit-identical replay");

  o.note("10000 random steps, no slack pulls or negative tension");
  o.note("4 releases x 5000 steps, " + std::to_string(gains) + " energy gains");
  o.note(fmt("settled %.3f mm from (750,750) after 2 s", settle));
  return o;
}

Outcome workspace() {
  Outcome o;
  o.require(is_feasible(kRef, Pose{{750, 750}}).feasible, "(750,750) feasible");
  o.require(!is_feasible(kRef, Pose{{750, 1435}}).feasible, "(750,1435) infeasible");
  const auto map = workspace_scan(kRef, {0, 1500}, {0, 1500}, 10);
  std::size_t asymmetric = 0;
  for (std::size_t r = 0; r < map.rows; ++r)
    for (std::size_t c = 0; c < map.cols; ++c)
      if (map.at(c, r).feasible != map.at(map.cols - 1 - c, r).feasible) ++asymmetric;
  o.require(asymmetric == 0, "mirror symmetry");

  // Along x = 750 the feasible cells form one contiguous run.
  const std::size_t col = 75;
  std::size_t runs = 0;
  bool prev = false;
  for (std::size_t r = 0; r < map.rows; ++r) {
    const bool f = map.at(col, r).feasible;
    if (f && !prev) ++runs;
    prev = f;
  }
  o.require(runs == 1, "monotone along x = 750");
  o.note(std::to_string(map.cells.size()) + " cells, " + std::to_string(map.feasible_count()) +
         " feasible, " + std::to_string(asymmetric) + " asymmetric, " + std::to_string(runs) +
         " feasible run(s) along x = 750");
  return o;
}

Outcome protocol() {
  Outcome o;
  std::mt19937_64 rng(8);
  const net::MsgType types[] = {net::MsgType::kHello,    net::MsgType::kConfig,
                                net::MsgType::kStart,    net::MsgType::kSetpoint,
                                net::MsgType::kState,    net::MsgType::kStop,
                                net::MsgType::kTimeSyncReq, net::MsgType::kTimeSyncRep,
                                net::MsgType::kError};
  std::uniform_int_distribution<int> type(0, 8), len(0, 64);
  std::uniform_real_distribution<double> val(-1e6, 1e6);
  int mismatches = 0;
  for (int k = 0; k < 10000; ++k) {
    net::Frame f;
    f.type = types[type(rng)];
    f.seq = static_cast<std::uint32_t>(rng());
    f.t_send_us = rng();
    f.payload.resize(static_cast<std::size_t>(len(rng)));
    for (auto& v : f.payload) v = val(rng);
    if (!(net::decode_frame(net::encode_frame(f)) == f)) ++mismatches;
  }
  o.require(mismatches == 0, "codec round trip");

  int reordered = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    net::DelaySchedule d(20, 15, seed);
    std::int64_t last = INT64_MIN;
    for (std::int64_t k = 0; k < 1000; ++k) {
      const auto r = d.release_us(k * 10000);
      if (r < last) ++reordered;
      last = r;
    }
  }

  // End to end through the gateway: the plant must see setpoints in order.
  const auto sp = sample(square_plan(1000), kRef, kDefaultCycle);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto a = net::socket_pair();
    auto b = net::socket_pair();
    std::uint32_t last_seq = 0;
    bool first = true;
    std::thread plant([&] {
      net::serve_plant_session(b.second, kRef, PlantConfig{}, [&](const net::Frame& f) {
        if (f.type != net::MsgType::kSetpoint) return;
        if (!first && f.seq <= last_seq) ++reordered;
        first = false;
        last_seq = f.seq;
      });
      b.second.shutdown_both();
    });
    std::thread gateway([&] {
      net::run_gateway_session(a.second, b.first, net::GatewayConfig{20, 15, seed});
      a.second.shutdown_both();
      b.first.shutdown_both();
    });
    net::run_controller(a.first, kRef, sp, net::ControllerOptions{});
    a.first.shutdown_both();
    gateway.join();
    plant.join();
  }
  o.require(reordered == 0, "gateway order");

  const auto exp = square_experiment(PlantMode::kDynamic, net::GatewayConfig{120, 10, 42});
  const auto l1 = net::run_experiment(exp, sp);
  const auto l2 = net::run_experiment(exp, sp);
  o.require(l1 == l2 && net::loop_log_to_csv(l1) == net::loop_log_to_csv(l2), "deterministic log");
  o.note("10000 random frames round-tripped");
  o.note("100 schedules and 5 gateway sessions kept order");
  o.note("replayed LoopLog identical (" + std::to_string(l1.records.size()) + " records)");
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;  // runtime bound, 0 for none
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {1, "Kinematics round-trip", 1.0, kinematics},
      {2, "Statics correctness", 0.0, statics},
      {3, "Position-error formula", 0.0, error_formula},
      {4, "Delay recovery", 30.0, delay_recovery},
      {5, "Tracking-error character", 120.0, tracking},
      {6, "Plant properties", 0.0, plant_properties},
      {7, "Workspace scan", 10.0, workspace},
      {8, "Protocol", 0.0, protocol},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0 && secs >= c.limit_s) o.require(false, fmt("runtime < %g s", c.limit_s));
    if (!o.pass) ++failed;
    std::printf("%s %d %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/8 criteria passed\n", 8 - failed);
  return failed == 0 ? 0 : 1;
}
