#include "cdpr/net/plant_server.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <optional>
#include <thread>

#include "cdpr/error.hpp"
#include "cdpr/kinematics.hpp"

namespace cdpr::net {

namespace {

using Clock = std::chrono::steady_clock;

class PlantSession {
 public:
  PlantSession(Stream& stream, const RobotDescription& desc, const PlantConfig& cfg,
               const FrameObserver& observer)
      : stream_(stream), out_(stream), desc_(desc), cfg_(cfg), observer_(observer),
        dt_us_(std::llround(cfg.dt * 1e6)) {}

  PlantSessionSummary run() {
    try {
      if (handshake()) {
        if (mode_ == TimeMode::kSimulated) {
          simulated_loop();
        } else {
          realtime_loop();
        }
      }
    } catch (const ProtocolError& e) {
      fail(ErrorCode::kMalformed, e.what());
    } catch (const TransportError& e) {
      summary_.error = std::string("transport: ") + e.what();
    } catch (const Error& e) {
      fail(ErrorCode::kPlantFailure, e.what());
    }
    summary_.steps = state_.steps;
    return summary_;
  }

 private:
  Frame next() {
    Frame f = stream_.receive();
    if (observer_) observer_(f);
    return f;
  }

  std::uint64_t now_us() const { return state_.steps * static_cast<std::uint64_t>(dt_us_); }

  void fail(ErrorCode code, const std::string& why) {
    summary_.error = why;
    try {
      out_.send(MsgType::kError, now_us(), {static_cast<double>(code)});
    } catch (const Error&) {
    }
    stream_.shutdown_both();
  }

  // Returns false when the session ended during the handshake.
  bool handshake() {
    Frame f = next();
    if (f.type == MsgType::kStop) return stop();
    if (f.type != MsgType::kHello || f.payload.size() != 1) {
      fail(ErrorCode::kUnexpectedMessage, "expected HELLO");
      return false;
    }
    const double hash = robot_hash(desc_);
    if (f.payload[0] != hash) {
      fail(ErrorCode::kHashMismatch, "robot description hash mismatch");
      return false;
    }
    out_.send(MsgType::kHello, 0, {hash});

    f = next();
    if (f.type == MsgType::kStop) return stop();
    if (f.type != MsgType::kConfig || f.payload.size() != 2) {
      fail(ErrorCode::kUnexpectedMessage, "expected CONFIG");
      return false;
    }
    const double cycle = f.payload[0];
    const double ratio = cycle / cfg_.dt;
    const double mode = f.payload[1];
    if (!(cycle > 0.0) || std::llround(ratio) < 1 ||
        std::abs(ratio - std::llround(ratio)) > 1e-6 || (mode != 0.0 && mode != 1.0)) {
      fail(ErrorCode::kBadConfig, "cycle must be a positive multiple of the plant dt");
      return false;
    }
    cycle_steps_ = static_cast<std::uint64_t>(std::llround(ratio));
    mode_ = static_cast<TimeMode>(static_cast<int>(mode));
    out_.send(MsgType::kConfig, 0, f.payload);

    f = next();
    if (f.type == MsgType::kStop) return stop();
    if (f.type != MsgType::kStart || f.payload.size() != 2) {
      fail(ErrorCode::kUnexpectedMessage, "expected START");
      return false;
    }
    try {
      state_ = init_state(desc_, Pose{{f.payload[0], f.payload[1]}});
    } catch (const Error& e) {
      fail(ErrorCode::kBadStart, e.what());
      return false;
    }
    received_ = state_.axis.l;
    from_ = received_;
    to_ = received_;
    out_.send(MsgType::kStart, 0, state_payload());
    return true;
  }

  bool stop() {
    out_.send(MsgType::kStop, now_us());
    summary_.clean_stop = true;
    return false;
  }

  // Axis command in force at plant step `at`.
  CableLengths command_at(std::uint64_t at) const {
    const auto ahead = std::min<std::uint64_t>(at - arrival_step_, cycle_steps_);
    const double w = static_cast<double>(ahead) / static_cast<double>(cycle_steps_);
    CableLengths c{from_};
    for (std::size_t i = 0; i < c.l.size(); ++i) c.l[i] += w * (to_[i] - from_[i]);
    return c;
  }

  // Command for the step that ends at steps + 1.
  CableLengths command() const { return command_at(state_.steps + 1); }

  std::vector<double> state_payload() const {
    const Measurement m = measure(state_);
    return encode_state({m.pose, m.lengths, m.tensions});
  }

  void emit_state_on_boundary() {
    if (state_.steps % cycle_steps_ != 0) return;
    if (last_state_step_ && *last_state_step_ == state_.steps) return;
    last_state_step_ = state_.steps;
    out_.send(MsgType::kState, now_us(), state_payload());
    ++summary_.states_sent;
  }

  bool apply_setpoint(const Frame& f) {
    if (f.payload.size() != desc_.cable_count()) {
      fail(ErrorCode::kMalformed, "SETPOINT has wrong cable count");
      return false;
    }
    // Like a position drive in cyclic-synchronous mode: glide from the
    // current command to where the newest setpoint's velocity will be one
    // cycle from now, instead of jumping.
    const CableLengths now = command_at(state_.steps);
    for (std::size_t i = 0; i < from_.size(); ++i)
      to_[i] = 2.0 * f.payload[i] - received_[i];
    from_ = now.l;
    received_ = f.payload;
    arrival_step_ = state_.steps;
    ++summary_.setpoints;
    return true;
  }

  void simulated_loop() {
    while (true) {
      const Frame f = next();
      switch (f.type) {
        case MsgType::kSetpoint:
          if (!apply_setpoint(f)) return;
          break;
        case MsgType::kTimeSyncReq: {
          if (f.payload.size() != 1 || !(f.payload[0] >= 0.0)) {
            fail(ErrorCode::kMalformed, "TIMESYNC request needs a time");
            return;
          }
          advance_to(static_cast<std::uint64_t>(std::llround(f.payload[0])));
          out_.send(MsgType::kTimeSyncRep, now_us(),
                    {f.payload[0], static_cast<double>(now_us())});
          break;
        }
        case MsgType::kStop:
          stop();
          return;
        default:
          fail(ErrorCode::kUnexpectedMessage, "unexpected message in session");
          return;
      }
    }
  }

  // Steps until the plant clock is the dt-grid point nearest to target_us.
  void advance_to(std::uint64_t target_us) {
    const auto dt = static_cast<std::uint64_t>(dt_us_);
    while (true) {
      emit_state_on_boundary();
      if ((state_.steps + 1) * dt > target_us + dt / 2) break;
      state_ = step(desc_, cfg_, state_, command());
    }
  }

  void realtime_loop() {
    const auto origin = Clock::now();
    std::mutex mu;
    std::atomic<bool> running{true};
    std::string step_error;

    std::thread stepper([&] {
      try {
        while (running) {
          const auto due = origin + std::chrono::microseconds(
                                        static_cast<std::int64_t>(state_.steps + 1) * dt_us_);
          std::this_thread::sleep_until(due);
          std::lock_guard lock(mu);
          if (!running) break;
          emit_state_on_boundary();
          state_ = step(desc_, cfg_, state_, command());
        }
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        step_error = e.what();
        running = false;
        stream_.shutdown_both();
      }
    });
    auto finish = [&] {
      running = false;
      stepper.join();
    };

    try {
      while (true) {
        const Frame f = next();
        if (f.type == MsgType::kSetpoint) {
          std::lock_guard lock(mu);
          if (!apply_setpoint(f)) break;
        } else if (f.type == MsgType::kTimeSyncReq && f.payload.size() == 1) {
          const auto now = std::chrono::duration_cast<std::chrono::microseconds>(
                               Clock::now() - origin).count();
          out_.send(MsgType::kTimeSyncRep, static_cast<std::uint64_t>(now),
                    {f.payload[0], static_cast<double>(now)});
        } else if (f.type == MsgType::kStop) {
          finish();
          stop();
          return;
        } else {
          finish();
          fail(ErrorCode::kUnexpectedMessage, "unexpected message in session");
          return;
        }
      }
    } catch (...) {
      finish();
      if (!step_error.empty()) {
        summary_.error = step_error;
        return;
      }
      throw;
    }
    finish();
  }

  Stream& stream_;
  FrameSender out_;
  const RobotDescription& desc_;
  const PlantConfig& cfg_;
  const FrameObserver& observer_;
  const std::int64_t dt_us_;
  std::uint64_t cycle_steps_ = 1;
  TimeMode mode_ = TimeMode::kSimulated;
  PlantState state_;
  std::vector<double> received_;  // newest SETPOINT
  std::vector<double> from_;      // command when it arrived
  std::vector<double> to_;        // its extrapolation one cycle later
  std::uint64_t arrival_step_ = 0;
  std::optional<std::uint64_t> last_state_step_;
  PlantSessionSummary summary_;
};

}  // namespace

PlantSessionSummary serve_plant_session(Stream& stream, const RobotDescription& desc,
                                        const PlantConfig& cfg, const FrameObserver& observer) {
  validate(desc, cfg);
  if (std::abs(cfg.dt * 1e6 - std::round(cfg.dt * 1e6)) > 1e-6)
    throw ValidationError("plant dt must be a whole number of microseconds");
  return PlantSession(stream, desc, cfg, observer).run();
}

PlantSessionSummary run_plant_server(const RobotDescription& desc, const PlantConfig& cfg,
                                     const Endpoint& listen,
                                     const std::function<void(std::uint16_t)>& on_listening) {
  validate(desc, cfg);
  Listener listener(listen);
  if (on_listening) on_listening(listener.port());
  Stream stream = listener.accept();
  return serve_plant_session(stream, desc, cfg);
}

}  // namespace cdpr::net
