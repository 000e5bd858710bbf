#include "cdpr/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "cdpr/csv.hpp"
#include "cdpr/error.hpp"

namespace cdpr::analysis {

namespace {

constexpr std::size_t kMinDelaySamples = 100;
constexpr std::size_t kMinWindowSamples = 10;

// Pearson correlation of x[i] against y[i + lag] over the overlap; a
// negative lag shifts the other way. NaN when either overlap is constant.
double correlation_at(std::span<const double> x, std::span<const double> y, long lag) {
  const std::size_t n = x.size();
  const std::size_t shift = static_cast<std::size_t>(std::labs(lag));
  const std::size_t len = n - shift;
  const double* a = x.data() + (lag < 0 ? shift : 0);
  const double* b = y.data() + (lag > 0 ? shift : 0);

  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(len);
  mb /= static_cast<double>(len);
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

bool constant(std::span<const double> s) {
  return std::all_of(s.begin(), s.end(), [&](double v) { return v == s.front(); });
}

double interpolate(const std::vector<double>& ts, const std::vector<double>& vs, double t) {
  if (t <= ts.front()) return vs.front();
  if (t >= ts.back()) return vs.back();
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - ts.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - ts[lo]) / (ts[hi] - ts[lo]);
  return vs[lo] + w * (vs[hi] - vs[lo]);
}

double coord(const Vec2& v, Axis axis) { return axis == Axis::kX ? v.x : v.y; }

void require_records(const net::LoopLog& log) {
  if (log.records.size() < 2) throw ValidationError("log has fewer than 2 records");
}

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

DelayEstimate estimate_delay(std::span<const double> target, std::span<const double> measured,
                             double cycle) {
  if (target.size() != measured.size())
    throw ValidationError("target and measured series differ in length");
  if (target.size() < kMinDelaySamples)
    throw ValidationError("delay estimation needs at least 100 samples");
  if (!(cycle > 0.0)) throw ValidationError("cycle must be > 0");
  if (constant(target)) throw DegenerateSignal("target series is constant");
  if (constant(measured)) throw DegenerateSignal("measured series is constant");

  const long max_lag = static_cast<long>(target.size() / 2);
  std::vector<double> r(static_cast<std::size_t>(2 * max_lag + 1));
  auto at = [&](long lag) -> double& { return r[static_cast<std::size_t>(lag + max_lag)]; };
  for (long lag = -max_lag; lag <= max_lag; ++lag) at(lag) = correlation_at(target, measured, lag);

  auto best_in = [&](long lo, long hi) {
    long best = lo;
    double best_r = -std::numeric_limits<double>::infinity();
    for (long lag = lo; lag <= hi; ++lag) {
      const double v = at(lag);
      if (!std::isnan(v) && v > best_r) {
        best_r = v;
        best = lag;
      }
    }
    return std::pair{best, best_r};
  };

  auto [lag, peak] = best_in(0, max_lag);
  const auto [neg_lag, neg_peak] = best_in(-max_lag, -1);
  if (!std::isfinite(peak) && !std::isfinite(neg_peak))
    throw DegenerateSignal("no overlap with non-zero variance");

  DelayEstimate est;
  if (neg_peak > peak) {
    est.anomaly = true;
    lag = neg_lag;
    peak = neg_peak;
  }
  est.lag_samples = lag;
  est.peak = peak;

  double offset = 0.0;
  if (lag > -max_lag && lag < max_lag) {
    const double rm = at(lag - 1);
    const double rp = at(lag + 1);
    const double denom = rm - 2.0 * peak + rp;
    if (std::isfinite(rm) && std::isfinite(rp) && denom < 0.0)
      offset = std::clamp(0.5 * (rm - rp) / denom, -0.5, 0.5);
  }
  est.delay_ms = (static_cast<double>(lag) + offset) * cycle * 1000.0;
  return est;
}

const char* to_string(Alignment a) {
  return a == Alignment::kExecution ? "execution" : "received";
}

Alignment alignment_from_string(const std::string& s) {
  if (s == "execution") return Alignment::kExecution;
  if (s == "received") return Alignment::kReceived;
  throw ValidationError("unknown alignment '" + s + "'");
}

double log_cycle(const net::LoopLog& log) {
  require_records(log);
  const auto& rs = log.records;
  return static_cast<double>(rs.back().t_us - rs.front().t_us) /
         static_cast<double>(rs.size() - 1) * 1e-6;
}

AlignedSeries align(const net::LoopLog& log, Alignment alignment) {
  const std::size_t m = log.cable_count;
  const std::size_t n = log.records.size();
  AlignedSeries s;
  s.t_s.reserve(n);
  s.target.reserve(n);
  s.measured.reserve(n);
  s.cmd.assign(m, std::vector<double>(n));
  s.measured_l.assign(m, std::vector<double>(n));
  for (std::size_t j = 0; j < n; ++j) {
    const auto& r = log.records[j];
    s.t_s.push_back(static_cast<double>(r.t_us) * 1e-6);
    s.target.push_back(r.target);
    s.measured.push_back(r.measured);
    for (std::size_t i = 0; i < m; ++i) {
      s.cmd[i][j] = r.cmd[i];
      s.measured_l[i][j] = r.measured_l[i];
    }
  }
  if (alignment == Alignment::kReceived || n == 0) return s;

  // Each distinct state once, at the plant time it was taken.
  std::vector<double> ts;
  std::vector<std::size_t> src;
  for (std::size_t j = 0; j < n; ++j) {
    const auto& r = log.records[j];
    const double t = static_cast<double>(r.t_us - r.state_age_us) * 1e-6;
    if (ts.empty() || t > ts.back()) {
      ts.push_back(t);
      src.push_back(j);
    }
  }
  auto column = [&](auto get) {
    std::vector<double> v;
    v.reserve(src.size());
    for (std::size_t j : src) v.push_back(get(log.records[j]));
    return v;
  };
  const auto mx = column([](const net::LoopRecord& r) { return r.measured.x; });
  const auto my = column([](const net::LoopRecord& r) { return r.measured.y; });
  for (std::size_t j = 0; j < n; ++j) {
    s.measured[j] = {interpolate(ts, mx, s.t_s[j]), interpolate(ts, my, s.t_s[j])};
  }
  for (std::size_t i = 0; i < m; ++i) {
    const auto ml = column([i](const net::LoopRecord& r) { return r.measured_l[i]; });
    for (std::size_t j = 0; j < n; ++j) s.measured_l[i][j] = interpolate(ts, ml, s.t_s[j]);
  }
  return s;
}

DelayReport delay_report(const net::LoopLog& log, Alignment alignment) {
  DelayReport rep;
  rep.cycle_s = log_cycle(log);
  rep.samples = log.records.size();
  rep.alignment = alignment;
  const AlignedSeries s = align(log, alignment);
  for (std::size_t i = 0; i < log.cable_count; ++i)
    rep.axes.push_back(estimate_delay(s.cmd[i], s.measured_l[i], rep.cycle_s));
  return rep;
}

SegmentError error_from_means(double mean_target, double mean_measured) {
  if (mean_target == 0.0) throw ValidationError("mean target position is zero");
  SegmentError e;
  e.mean_target = mean_target;
  e.mean_measured = mean_measured;
  e.signed_pct = (mean_measured - mean_target) / mean_target * 100.0;
  e.error_pct = std::fabs(e.signed_pct);
  return e;
}

SegmentError segment_error(const net::LoopLog& log, Axis axis, const TimeWindow& window,
                           Alignment alignment) {
  const AlignedSeries s = align(log, alignment);
  double st = 0.0;
  double sm = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < s.t_s.size(); ++j) {
    if (s.t_s[j] < window.t0 - 1e-9 || s.t_s[j] > window.t1 + 1e-9) continue;
    st += coord(s.target[j], axis);
    sm += coord(s.measured[j], axis);
    ++count;
  }
  if (count < kMinWindowSamples)
    throw Error("window [" + csv::g6(window.t0) + ", " + csv::g6(window.t1) +
                "] s holds fewer than 10 samples");
  SegmentError e = error_from_means(st / static_cast<double>(count),
                                    sm / static_cast<double>(count));
  e.samples = count;
  return e;
}

ErrorRow compare_errors(std::string label, const SegmentError& a, const SegmentError& b) {
  ErrorRow row;
  row.label = std::move(label);
  row.a = a;
  row.b = b;
  row.difference_pct = a.error_pct - b.error_pct;
  return row;
}

ErrorReport compare_logs(const net::LoopLog& a, const net::LoopLog& b,
                         const std::vector<TimeWindow>& windows, Axis axis, Alignment alignment) {
  require_records(a);
  require_records(b);
  auto covers = [](const net::LoopLog& log, const TimeWindow& w) {
    const double t0 = static_cast<double>(log.records.front().t_us) * 1e-6;
    const double t1 = static_cast<double>(log.records.back().t_us) * 1e-6;
    return w.t0 >= t0 - 1e-9 && w.t1 <= t1 + 1e-9;
  };
  ErrorReport rep;
  for (const auto& w : windows) {
    if (!covers(a, w) || !covers(b, w))
      throw Error("window '" + w.label + "' is not covered by both logs");
    rep.rows.push_back(compare_errors(w.label, segment_error(a, axis, w, alignment),
                                      segment_error(b, axis, w, alignment)));
  }
  return rep;
}

std::vector<TimeWindow> horizontal_windows(const TrajectoryPlan& plan, double margin) {
  if (!(margin >= 0.0 && margin < 0.5)) throw ValidationError("margin must be in [0, 0.5)");
  const auto bp = plan.breakpoints();
  struct Found {
    TimeWindow w;
    double y;
  };
  std::vector<Found> found;
  for (std::size_t k = 0; k < plan.segments.size(); ++k) {
    const Segment& seg = plan.segments[k];
    const double len = seg.length();
    if (len <= 0.0 || std::fabs(seg.end.y - seg.start.y) > 1e-9 * len) continue;
    const TrapezoidalProfile prof = seg.profile();
    double cut = margin * prof.duration();
    if (!prof.triangular()) cut = std::max(cut, prof.ramp_time());
    found.push_back({{bp[k] + cut, bp[k + 1] - cut, ""}, seg.start.y});
  }
  std::stable_sort(found.begin(), found.end(),
                   [](const Found& a, const Found& b) { return a.y > b.y; });
  std::vector<TimeWindow> out;
  for (std::size_t k = 0; k < found.size(); ++k) {
    TimeWindow w = found[k].w;
    if (found.size() == 2) {
      w.label = k == 0 ? "upper" : "lower";
    } else {
      w.label = "y=" + csv::g6(found[k].y);
    }
    out.push_back(w);
  }
  return out;
}

std::string delay_csv(const AnalysisReport& report) {
  std::ostringstream os;
  os << "log,axis,delay_ms,lag_samples,peak_corr,anomaly,cycle_ms,samples,alignment\n";
  auto rows = [&](const char* name, const DelayReport& d) {
    for (std::size_t i = 0; i < d.axes.size(); ++i) {
      const auto& e = d.axes[i];
      os << name << ',' << (i + 1) << ',' << csv::g6(e.delay_ms) << ',' << e.lag_samples << ','
         << csv::g6(e.peak) << ',' << (e.anomaly ? 1 : 0) << ',' << csv::g6(d.cycle_s * 1000.0)
         << ',' << d.samples << ',' << to_string(d.alignment) << '\n';
    }
  };
  rows("a", report.delay_a);
  if (report.delay_b) rows("b", *report.delay_b);
  return os.str();
}

std::string errors_csv(const ErrorReport& errors) {
  std::ostringstream os;
  os << "mean_target_a,mean_measured_a,error_pct_a,mean_target_b,mean_measured_b,error_pct_b,"
        "difference_pct\n";
  for (const auto& r : errors.rows) {
    os << csv::g6(r.a.mean_target) << ',' << csv::g6(r.a.mean_measured) << ','
       << csv::g6(r.a.error_pct) << ',' << csv::g6(r.b.mean_target) << ','
       << csv::g6(r.b.mean_measured) << ',' << csv::g6(r.b.error_pct) << ','
       << csv::g6(r.difference_pct) << '\n';
  }
  return os.str();
}

std::string series_csv(const AlignedSeries& s) {
  const std::size_t m = s.cmd.size();
  std::ostringstream os;
  os << "t_s,target_x,target_y,meas_x,meas_y";
  for (std::size_t i = 0; i < m; ++i) os << ",cmd_l" << (i + 1);
  for (std::size_t i = 0; i < m; ++i) os << ",meas_l" << (i + 1);
  os << '\n';
  for (std::size_t j = 0; j < s.t_s.size(); ++j) {
    os << csv::g6(s.t_s[j]) << ',' << csv::g6(s.target[j].x) << ',' << csv::g6(s.target[j].y)
       << ',' << csv::g6(s.measured[j].x) << ',' << csv::g6(s.measured[j].y);
    for (std::size_t i = 0; i < m; ++i) os << ',' << csv::g6(s.cmd[i][j]);
    for (std::size_t i = 0; i < m; ++i) os << ',' << csv::g6(s.measured_l[i][j]);
    os << '\n';
  }
  return os.str();
}

std::string report_text(const AnalysisReport& report) {
  std::ostringstream os;
  char line[160];
  os << "Time delay [ms]\n";
  std::snprintf(line, sizeof line, "  %-6s %12s %12s\n", "Axis", "log A",
                report.delay_b ? "log B" : "");
  os << line;
  for (std::size_t i = 0; i < report.delay_a.axes.size(); ++i) {
    const auto& a = report.delay_a.axes[i];
    std::string b;
    if (report.delay_b && i < report.delay_b->axes.size())
      b = fmt3(report.delay_b->axes[i].delay_ms) + (report.delay_b->axes[i].anomaly ? "!" : "");
    std::snprintf(line, sizeof line, "  %-6zu %12s %12s\n", i + 1,
                  (fmt3(a.delay_ms) + (a.anomaly ? "!" : "")).c_str(), b.c_str());
    os << line;
  }
  if (report.errors) {
    os << "\nPosition error (y)\n";
    std::snprintf(line, sizeof line, "  %-8s %12s %12s %9s %12s %12s %9s %10s\n", "Segment",
                  "target A", "measured A", "err A %", "target B", "measured B", "err B %",
                  "diff %");
    os << line;
    for (const auto& r : report.errors->rows) {
      std::snprintf(line, sizeof line,
                    "  %-8s %12.3f %12.3f %9.3f %12.3f %12.3f %9.3f %10.3f\n", r.label.c_str(),
                    r.a.mean_target, r.a.mean_measured, r.a.error_pct, r.b.mean_target,
                    r.b.mean_measured, r.b.error_pct, r.difference_pct);
      os << line;
    }
  }
  const bool anomaly =
      std::any_of(report.delay_a.axes.begin(), report.delay_a.axes.end(),
                  [](const DelayEstimate& e) { return e.anomaly; }) ||
      (report.delay_b && std::any_of(report.delay_b->axes.begin(), report.delay_b->axes.end(),
                                     [](const DelayEstimate& e) { return e.anomaly; }));
  if (anomaly) os << "\nwarning: '!' marks a negative delay (measured leads target)\n";
  return os.str();
}

void emit_report(const AnalysisReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const std::string& text) {
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw Error("cannot write " + path.string());
  };
  write("delay.csv", delay_csv(report));
  if (report.errors) write("errors.csv", errors_csv(*report.errors));
  write("series_a.csv", series_csv(report.series_a));
  if (report.series_b) write("series_b.csv", series_csv(*report.series_b));
  write("report.txt", report_text(report));
}

}  // namespace cdpr::analysis
