#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "cdpr/net/stream.hpp"
#include "cdpr/plant.hpp"

namespace cdpr::net {

struct PlantSessionSummary {
  std::uint64_t steps = 0;
  std::uint64_t setpoints = 0;
  std::uint64_t states_sent = 0;
  bool clean_stop = false;      // ended by STOP
  std::string error;            // set when the session closed with an ERROR frame
};

/// Called for every frame the plant receives; used by tests and tracing.
using FrameObserver = std::function<void(const Frame&)>;

/// Serves one controller session on `stream`.
///
/// Handshake: HELLO (robot hash must match), CONFIG [cycle_s, time_mode],
/// START [x, y]; each is answered with a frame of the same type, START with
/// the initial state. Then SETPOINT frames replace the axis command and STATE
/// frames go out every controller cycle of plant time. In simulated time the
/// plant only advances on TIMESYNC requests, stepping exactly to the
/// requested virtual time; in real time it steps against the wall clock.
/// STOP is answered with STOP and ends the session. Protocol violations are
/// answered with an ERROR frame and close the session.
PlantSessionSummary serve_plant_session(Stream& stream, const RobotDescription& desc,
                                        const PlantConfig& cfg,
                                        const FrameObserver& observer = {});

/// Listens on `listen`, serves exactly one session, returns after it ends.
/// `on_listening` receives the bound port (useful with port 0).
PlantSessionSummary run_plant_server(const RobotDescription& desc, const PlantConfig& cfg,
                                     const Endpoint& listen,
                                     const std::function<void(std::uint16_t)>& on_listening = {});

}  // namespace cdpr::net
