#pragma once

#include <filesystem>
#include <vector>

#include "cdpr/net/loop_log.hpp"
#include "cdpr/net/stream.hpp"
#include "cdpr/trajectory.hpp"

namespace cdpr::net {

struct ControllerOptions {
  double cycle = kDefaultCycle;  // s
  TimeMode mode = TimeMode::kSimulated;
  /// Keep streaming the final setpoint this long after the plan ends.
  double tail_s = 0.0;
};

/// Streams `setpoints` (one per cycle, open loop) to the plant on `stream`
/// and logs the newest STATE available at every cycle.
///
/// Throws ProtocolError when the handshake fails (code 3 for a robot hash
/// mismatch). A connection lost mid-run returns the log so far, marked
/// truncated.
LoopLog run_controller(Stream& stream, const RobotDescription& desc,
                       const std::vector<Setpoint>& setpoints, const ControllerOptions& opts);

/// Connects to `plant`, runs `plan` and writes the LoopLog CSV to `log_path`.
/// Nothing is written when the connection cannot be established.
LoopLog run_controller(const RobotDescription& desc, const TrajectoryPlan& plan,
                       const ControllerOptions& opts, const Endpoint& plant,
                       const std::filesystem::path& log_path);

}  // namespace cdpr::net
