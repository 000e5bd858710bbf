#pragma once

#include <cstdint>
#include <functional>
#include <random>

#include "cdpr/net/stream.hpp"

namespace cdpr::net {

struct GatewayConfig {
  double base_delay_ms = 0.0;
  double jitter_ms = 0.0;
  std::uint64_t seed = 0;
};

/// Per-direction release scheduler. Each frame is held for
/// base + U(-jitter, +jitter), and never released before its predecessor,
/// so frames keep their order.
class DelaySchedule {
 public:
  DelaySchedule(double base_ms, double jitter_ms, std::uint64_t seed);

  /// Draws the next delay, in microseconds (never negative).
  std::int64_t sample_delay_us();
  /// Release time for a frame arriving at arrival_us.
  std::int64_t release_us(std::int64_t arrival_us);

 private:
  double base_us_;
  double jitter_us_;
  std::mt19937_64 rng_;
  std::int64_t last_release_ = INT64_MIN;
};

struct GatewayStats {
  std::uint64_t to_plant = 0;
  std::uint64_t to_controller = 0;
};

/// Relays one session between `controller` and `plant`.
///
/// HELLO and CONFIG are relayed in lockstep; the CONFIG time mode then
/// selects the relay. In real time, each direction has a reader stamping
/// arrivals and a writer that sleeps until the scheduled release and writes
/// the frame bytes unchanged. In simulated time the gateway is driven by the
/// controller's TIMESYNC requests: a SETPOINT sent at virtual time t is
/// delivered at t + delay by first advancing the plant to that instant, and
/// STATE frames are released to the controller at their plant time + delay.
GatewayStats run_gateway_session(Stream& controller, Stream& plant, const GatewayConfig& cfg);

/// Accepts one controller on `listen`, connects to `upstream` (throws
/// TransportError if that fails) and relays until either side disconnects.
GatewayStats run_gateway(const Endpoint& listen, const Endpoint& upstream,
                         const GatewayConfig& cfg,
                         const std::function<void(std::uint16_t)>& on_listening = {});

}  // namespace cdpr::net
