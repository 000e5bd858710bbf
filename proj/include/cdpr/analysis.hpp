#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdpr/net/loop_log.hpp"
#include "cdpr/trajectory.hpp"

namespace cdpr::analysis {

struct DelayEstimate {
  double delay_ms = 0.0;  // refined; positive when measured lags target
  long lag_samples = 0;   // integer argmax before refinement
  double peak = 0.0;      // normalised correlation at the peak
  /// The best correlation was at a negative lag (measured leads target).
  bool anomaly = false;
};

/// Lag of `measured` behind `target` by normalised cross-correlation.
///
/// Both series are sampled every `cycle` seconds and have the same length of
/// at least 100. Every integer lag up to half the length is scored with the
/// Pearson correlation over the overlapping samples; the best lag is refined
/// by a parabola through it and its two neighbours. Throws DegenerateSignal
/// when either series is constant.
DelayEstimate estimate_delay(std::span<const double> target, std::span<const double> measured,
                             double cycle);

enum class Alignment {
  /// Measured samples placed at the plant time they describe (controller
  /// time minus state age), then resampled onto the controller grid. Removes
  /// the telemetry return path, leaving the execution delay.
  kExecution,
  /// Measured samples at the controller cycle in which they were received.
  kReceived,
};

const char* to_string(Alignment a);
Alignment alignment_from_string(const std::string& s);

/// Target and measured signals on the controller's cycle grid.
struct AlignedSeries {
  std::vector<double> t_s;
  std::vector<Vec2> target;
  std::vector<Vec2> measured;
  std::vector<std::vector<double>> cmd;         // [cable][sample]
  std::vector<std::vector<double>> measured_l;  // [cable][sample]
};

AlignedSeries align(const net::LoopLog& log, Alignment alignment);

/// Controller cycle recovered from the log's timestamps, in seconds.
double log_cycle(const net::LoopLog& log);

struct DelayReport {
  std::vector<DelayEstimate> axes;  // one per cable axis
  double cycle_s = 0.0;
  std::size_t samples = 0;
  Alignment alignment = Alignment::kExecution;
};

DelayReport delay_report(const net::LoopLog& log, Alignment alignment = Alignment::kExecution);

enum class Axis { kX, kY };

struct TimeWindow {
  double t0 = 0.0;  // s
  double t1 = 0.0;  // s
  std::string label;
};

struct SegmentError {
  double mean_target = 0.0;
  double mean_measured = 0.0;
  double error_pct = 0.0;   // |measured - target| / target * 100
  double signed_pct = 0.0;  // (measured - target) / target * 100
  std::size_t samples = 0;
};

SegmentError error_from_means(double mean_target, double mean_measured);

/// Means of one coordinate over the samples with t in [t0, t1]. Throws
/// cdpr::Error when the window holds fewer than 10 samples.
SegmentError segment_error(const net::LoopLog& log, Axis axis, const TimeWindow& window,
                           Alignment alignment = Alignment::kExecution);

struct ErrorRow {
  std::string label;
  SegmentError a;
  SegmentError b;
  double difference_pct = 0.0;  // a.error_pct - b.error_pct
};

struct ErrorReport {
  std::vector<ErrorRow> rows;
};

ErrorRow compare_errors(std::string label, const SegmentError& a, const SegmentError& b);

/// One row per window. Throws cdpr::Error if a window is not covered by
/// both logs.
ErrorReport compare_logs(const net::LoopLog& a, const net::LoopLog& b,
                         const std::vector<TimeWindow>& windows, Axis axis = Axis::kY,
                         Alignment alignment = Alignment::kExecution);

/// Windows over the horizontal segments of `plan`, upper segment first.
/// Each keeps the cruise phase when there is one, and always drops at
/// least `margin` of the segment duration at both ends.
std::vector<TimeWindow> horizontal_windows(const TrajectoryPlan& plan, double margin = 0.1);

struct AnalysisReport {
  DelayReport delay_a;
  std::optional<DelayReport> delay_b;
  std::optional<ErrorReport> errors;  // present when both logs are given
  AlignedSeries series_a;
  std::optional<AlignedSeries> series_b;
};

/// Writes into `dir`: delay.csv (one row per log and axis), errors.csv
/// (one row per window, 7 columns), series_a.csv / series_b.csv (aligned
/// target and measured signals for plotting) and report.txt.
void emit_report(const AnalysisReport& report, const std::filesystem::path& dir);

std::string delay_csv(const AnalysisReport& report);
std::string errors_csv(const ErrorReport& errors);
std::string series_csv(const AlignedSeries& series);
std::string report_text(const AnalysisReport& report);

}  // namespace cdpr::analysis
