#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "cdpr/analysis.hpp"
#include "cdpr/error.hpp"
#include "cdpr/net/experiment.hpp"
#include "oracle.hpp"

namespace cdpr::analysis {
namespace {

const RobotDescription kRef = reference_robot();

std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

std::vector<double> delayed(const std::vector<double>& x, long d) {
  std::vector<double> y(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const long j = std::clamp(static_cast<long>(k) - d, 0L, static_cast<long>(x.size()) - 1);
    y[k] = x[static_cast<std::size_t>(j)];
  }
  return y;
}

// A log whose measurement repeats the setpoint `lag` cycles later.
net::LoopLog synthetic_log(const std::vector<Setpoint>& sp, long lag, Vec2 offset = {}) {
  net::LoopLog log;
  log.cable_count = 2;
  for (std::size_t k = 0; k < sp.size(); ++k) {
    const auto& old = sp[static_cast<std::size_t>(std::max(0L, static_cast<long>(k) - lag))];
    net::LoopRecord r;
    r.t_us = static_cast<std::int64_t>(k) * 10000;
    r.target = sp[k].pose.p;
    r.cmd = sp[k].lengths.l;
    r.measured = old.pose.p + offset;
    r.measured_l = old.lengths.l;
    r.tensions = {1.0, 1.0};
    log.records.push_back(r);
  }
  return log;
}

TEST(EstimateDelay, ThirteenSampleShift) {
  const auto x = white_noise(1000, 1);
  const auto est = estimate_delay(x, delayed(x, 13), 0.01);
  EXPECT_EQ(est.lag_samples, 13);
  EXPECT_NEAR(est.delay_ms, 130.0, 1.0);
  EXPECT_FALSE(est.anomaly);
  EXPECT_NEAR(est.peak, oracle::pearson_at(x, delayed(x, 13), 13), 1e-12);
}

TEST(EstimateDelay, IntegerShiftsRecovered) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<long> lag(0, 60);
  for (std::uint64_t k = 0; k < 30; ++k) {
    const long d = lag(rng);
    const auto x = white_noise(600, 100 + k);
    const auto est = estimate_delay(x, delayed(x, d), 0.004);
    EXPECT_EQ(est.lag_samples, d);
    EXPECT_NEAR(est.delay_ms, 4.0 * static_cast<double>(d), 2.0);
  }
}

TEST(EstimateDelay, Identity) {
  const auto x = white_noise(500, 3);
  const auto est = estimate_delay(x, x, 0.01);
  EXPECT_EQ(est.lag_samples, 0);
  EXPECT_NEAR(est.delay_ms, 0.0, 5.0);
  EXPECT_NEAR(est.peak, 1.0, 1e-12);
}

TEST(EstimateDelay, LeadingMeasurementFlagged) {
  const auto x = white_noise(500, 4);
  const auto est = estimate_delay(delayed(x, 7), x, 0.01);
  EXPECT_TRUE(est.anomaly);
  EXPECT_EQ(est.lag_samples, -7);
  EXPECT_LT(est.delay_ms, 0.0);
}

TEST(EstimateDelay, InvariantToOffsetAndScale) {
  const auto x = white_noise(800, 5);
  auto y = delayed(x, 21);
  const auto base = estimate_delay(x, y, 0.01);
  for (auto& v : y) v = 3.0 * v + 250.0;
  const auto moved = estimate_delay(x, y, 0.01);
  EXPECT_EQ(moved.lag_samples, base.lag_samples);
  EXPECT_NEAR(moved.delay_ms, base.delay_ms, 1e-9);
}

TEST(EstimateDelay, Rejections) {
  const std::vector<double> flat(200, 4.0);
  const auto x = white_noise(200, 6);
  EXPECT_THROW(estimate_delay(flat, x, 0.01), DegenerateSignal);
  EXPECT_THROW(estimate_delay(x, flat, 0.01), DegenerateSignal);
  EXPECT_THROW(estimate_delay(white_noise(50, 7), white_noise(50, 8), 0.01), ValidationError);
  EXPECT_THROW(estimate_delay(x, white_noise(201, 9), 0.01), ValidationError);
}

TEST(DelayReport, SineTrajectory) {
  const auto sp = sample_sine({750, 800}, {150, 100}, 1.7, 8.0, kRef, 0.01);
  const auto rep = delay_report(synthetic_log(sp, 12));
  ASSERT_EQ(rep.axes.size(), 2u);
  EXPECT_NEAR(rep.cycle_s, 0.01, 1e-12);
  for (const auto& d : rep.axes) {
    EXPECT_EQ(d.lag_samples, 12);
    EXPECT_NEAR(d.delay_ms, 120.0, 2.0);
  }
}

TEST(DelayReport, ExecutionAlignmentRemovesStateAge) {
  const auto sp = sample_sine({750, 800}, {150, 100}, 1.7, 8.0, kRef, 0.01);
  auto log = synthetic_log(sp, 12);
  // Pretend 5 of the 12 cycles were spent on the way back.
  for (auto& r : log.records) r.state_age_us = 50000;
  const auto exec = delay_report(log, Alignment::kExecution);
  const auto recv = delay_report(log, Alignment::kReceived);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(exec.axes[i].delay_ms, 70.0, 2.0);
    EXPECT_NEAR(recv.axes[i].delay_ms, 120.0, 2.0);
  }
  EXPECT_EQ(alignment_from_string(to_string(Alignment::kReceived)), Alignment::kReceived);
  EXPECT_THROW(alignment_from_string("sideways"), ValidationError);
}

TEST(DelayReport, RemoteLoopNearGatewayDelay) {
  net::Experiment e;
  e.robot = kRef;
  e.gateway = net::GatewayConfig{120, 10, 42};
  e.controller.tail_s = 0.5;
  const auto sp = sample_sine({750, 800}, {150, 100}, 2.0, 8.0, kRef, 0.01);
  const auto rep = delay_report(net::run_experiment(e, sp));
  for (const auto& d : rep.axes) {
    EXPECT_GE(d.delay_ms, 110.0);
    EXPECT_LE(d.delay_ms, 150.0);
  }
}

TEST(ErrorFromMeans, KnownValues) {
  struct Row {
    double target, measured, pct;
  };
  // Values quoted to three decimals; the percentages follow from the means.
  const Row rows[] = {{947.613, 946.016, 0.168}, {947.613, 948.670, 0.112},
                      {749.578, 750.183, 0.081}, {749.582, 748.844, 0.098},
                      {948.046, 945.437, 0.275}, {948.035, 945.879, 0.227},
                      {749.594, 750.510, 0.122}, {749.600, 746.090, 0.468}};
  for (const auto& r : rows) EXPECT_NEAR(error_from_means(r.target, r.measured).error_pct, r.pct, 1e-3);

  EXPECT_NEAR(compare_errors("", error_from_means(947.613, 946.016),
                             error_from_means(947.613, 948.670)).difference_pct, 0.057, 1e-3);
  EXPECT_NEAR(compare_errors("", error_from_means(749.578, 750.183),
                             error_from_means(749.582, 748.844)).difference_pct, -0.017, 1e-3);
  EXPECT_NEAR(compare_errors("", error_from_means(948.046, 945.437),
                             error_from_means(948.035, 945.879)).difference_pct, 0.048, 1e-3);
  EXPECT_NEAR(compare_errors("", error_from_means(749.594, 750.510),
                             error_from_means(749.600, 746.090)).difference_pct, -0.346, 1e-3);

  const auto e = error_from_means(1000, 990);
  EXPECT_DOUBLE_EQ(e.signed_pct, -1.0);
  EXPECT_DOUBLE_EQ(e.error_pct, 1.0);
  EXPECT_THROW(error_from_means(0, 1), ValidationError);
}

TEST(HorizontalWindows, SlowSquare) {
  const auto plan = plan_square({750, 850}, 200, 100, 2000);
  const auto w = horizontal_windows(plan);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].label, "upper");
  // 2.05 s per side; 10% of that outlasts the 0.05 s ramp.
  EXPECT_NEAR(w[0].t0, 4.1 + 0.205, 1e-9);
  EXPECT_NEAR(w[0].t1, 6.15 - 0.205, 1e-9);
  EXPECT_EQ(w[1].label, "lower");
  EXPECT_NEAR(w[1].t0, 0.205, 1e-9);
  EXPECT_NEAR(w[1].t1, 2.05 - 0.205, 1e-9);
}

TEST(HorizontalWindows, RampLongerThanMargin) {
  // 0.5 s ramps on a 2.5 s segment: the ramp decides.
  const auto w = horizontal_windows(plan_square({750, 850}, 200, 100, 200));
  EXPECT_NEAR(w[1].t0, 0.5, 1e-9);
  EXPECT_NEAR(w[1].t1, 2.0, 1e-9);
}

TEST(HorizontalWindows, TriangularProfileKeepsCentre) {
  const auto plan = plan_square({750, 850}, 200, 1000, 2000);
  const double d = oracle::trapezoid_duration(200, 1000, 2000);
  const auto w = horizontal_windows(plan);
  EXPECT_NEAR(w[1].t0, 0.1 * d, 1e-9);
  EXPECT_NEAR(w[1].t1, 0.9 * d, 1e-9);
  EXPECT_THROW(horizontal_windows(plan, 0.5), ValidationError);
}

TEST(SegmentError, Means) {
  const auto plan = plan_square({750, 850}, 200, 100, 2000);
  const auto sp = sample(plan, kRef, 0.01);
  const auto log = synthetic_log(sp, 0, {0.0, -2.0});
  const auto w = horizontal_windows(plan);
  const auto up = segment_error(log, Axis::kY, w[0]);
  EXPECT_NEAR(up.mean_target, 950.0, 1e-9);
  EXPECT_NEAR(up.mean_measured, 948.0, 1e-9);
  EXPECT_NEAR(up.signed_pct, -200.0 / 950.0, 1e-9);
  EXPECT_EQ(up.samples, 164u);  // 4.31 .. 5.94 s
  EXPECT_THROW(segment_error(log, Axis::kY, TimeWindow{1.0, 1.05, ""}), Error);
}

TEST(CompareLogs, IdenticalLogsHaveNoDifference) {
  const auto plan = plan_square({750, 850}, 200, 100, 2000);
  const auto log = synthetic_log(sample(plan, kRef, 0.01), 3, {0.5, 0.5});
  const auto rep = compare_logs(log, log, horizontal_windows(plan));
  ASSERT_EQ(rep.rows.size(), 2u);
  for (const auto& r : rep.rows) EXPECT_EQ(r.difference_pct, 0.0);
  EXPECT_THROW(compare_logs(log, log, {TimeWindow{100, 101, "late"}}), Error);
}

TEST(EmitReport, FilesAndDeterminism) {
  const auto plan = plan_square({750, 850}, 200, 100, 2000);
  const auto sp = sample(plan, kRef, 0.01);
  const auto a = synthetic_log(sp, 12, {0, -1});
  const auto b = synthetic_log(sp, 2, {0, 1});
  AnalysisReport rep;
  rep.delay_a = delay_report(a);
  rep.delay_b = delay_report(b);
  rep.errors = compare_logs(a, b, horizontal_windows(plan));
  rep.series_a = align(a, Alignment::kExecution);
  rep.series_b = align(b, Alignment::kExecution);

  const auto dir = std::filesystem::temp_directory_path() / "cdpr_report";
  std::filesystem::remove_all(dir);
  emit_report(rep, dir);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), {});
  };
  auto lines = [](const std::string& s) {
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
  };
  const auto delay = slurp(dir / "delay.csv");
  EXPECT_EQ(lines(delay), 5u);
  EXPECT_EQ(delay.substr(0, delay.find('\n')),
            "log,axis,delay_ms,lag_samples,peak_corr,anomaly,cycle_ms,samples,alignment");
  const auto errors = slurp(dir / "errors.csv");
  EXPECT_EQ(lines(errors), 3u);
  std::istringstream first(errors.substr(errors.find('\n') + 1));
  std::string row;
  std::getline(first, row);
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 6);
  EXPECT_EQ(lines(slurp(dir / "series_a.csv")), sp.size() + 1);
  EXPECT_TRUE(std::filesystem::exists(dir / "series_b.csv"));
  EXPECT_NE(slurp(dir / "report.txt").find("upper"), std::string::npos);
  EXPECT_EQ(slurp(dir / "report.txt"), report_text(rep));

  const auto again = std::filesystem::temp_directory_path() / "cdpr_report_again";
  std::filesystem::remove_all(again);
  emit_report(rep, again);
  for (const char* f : {"delay.csv", "errors.csv", "series_a.csv", "series_b.csv", "report.txt"})
    EXPECT_EQ(slurp(dir / f), slurp(again / f)) << f;
}

}  // namespace
}  // namespace cdpr::analysis
