#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cdpr/model.hpp"

namespace cdpr::net {

/// One controller cycle: what was commanded and the newest plant state the
/// controller had received by then.
struct LoopRecord {
  std::int64_t t_us = 0;
  Vec2 target;
  std::vector<double> cmd;        // mm
  Vec2 measured;
  std::vector<double> measured_l; // mm
  std::vector<double> tensions;   // N
  std::int64_t state_age_us = 0;  // controller time minus plant time of that state

  friend bool operator==(const LoopRecord&, const LoopRecord&) = default;
};

struct LoopLog {
  std::size_t cable_count = 0;
  std::vector<LoopRecord> records;
  /// The connection dropped before the plan finished.
  bool truncated = false;

  friend bool operator==(const LoopLog&, const LoopLog&) = default;
};

/// CSV: t_us,target_x,target_y,cmd_l1..lm,meas_x,meas_y,meas_l1..lm,t1..tm,state_age_us.
/// Reals use 6 significant digits, the microsecond columns are written as
/// integers. A truncated log ends with a "# truncated" line.
std::string loop_log_to_csv(const LoopLog& log);
void write_loop_log(const LoopLog& log, const std::filesystem::path& path);

/// Throws ParseError for a malformed file.
LoopLog loop_log_from_csv(const std::string& text);
LoopLog read_loop_log(const std::filesystem::path& path);

}  // namespace cdpr::net
