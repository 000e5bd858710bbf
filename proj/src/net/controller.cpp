#include "cdpr/net/controller.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>

#include "cdpr/error.hpp"

namespace cdpr::net {

namespace {

using Clock = std::chrono::steady_clock;

struct Latest {
  StatePayload state;
  std::int64_t plant_t_us = 0;
};

[[noreturn]] void throw_remote_error(const Frame& f, const char* during) {
  const int code = f.payload.empty() ? 0 : static_cast<int>(f.payload[0]);
  std::string why = std::string("plant reported error ") + std::to_string(code) + " during " + during;
  if (code == static_cast<int>(ErrorCode::kHashMismatch))
    why = "handshake mismatch: robot description hash differs";
  throw ProtocolError(why, code);
}

Frame expect(Stream& stream, MsgType type, const char* during) {
  const Frame f = stream.receive();
  if (f.type == MsgType::kError) throw_remote_error(f, during);
  if (f.type != type) throw ProtocolError(std::string("unexpected reply during ") + during, 2);
  return f;
}

LoopRecord make_record(std::int64_t t_us, const Setpoint& sp, const Latest& latest,
                       std::int64_t age_us) {
  LoopRecord r;
  r.t_us = t_us;
  r.target = sp.pose.p;
  r.cmd = sp.lengths.l;
  r.measured = latest.state.pose.p;
  r.measured_l = latest.state.lengths.l;
  r.tensions = latest.state.tensions.t;
  r.state_age_us = age_us;
  return r;
}

class Session {
 public:
  Session(Stream& stream, const RobotDescription& desc, const std::vector<Setpoint>& setpoints,
          const ControllerOptions& opts)
      : stream_(stream), out_(stream), desc_(desc), setpoints_(setpoints), opts_(opts),
        cycle_us_(std::llround(opts.cycle * 1e6)) {
    log_.cable_count = desc.cable_count();
    const auto tail = static_cast<std::size_t>(std::llround(opts.tail_s / opts.cycle));
    cycles_ = setpoints.size() + tail;
  }

  LoopLog run() {
    handshake();
    try {
      if (opts_.mode == TimeMode::kSimulated) {
        simulated();
      } else {
        realtime();
      }
    } catch (const TransportError&) {
      log_.truncated = true;
    }
    return std::move(log_);
  }

 private:
  const Setpoint& setpoint(std::size_t k) const {
    return setpoints_[std::min(k, setpoints_.size() - 1)];
  }

  void handshake() {
    const Pose start = setpoints_.front().pose;
    out_.send(MsgType::kHello, 0, {robot_hash(desc_)});
    expect(stream_, MsgType::kHello, "HELLO");
    out_.send(MsgType::kConfig, 0,
              {opts_.cycle, static_cast<double>(static_cast<int>(opts_.mode))});
    expect(stream_, MsgType::kConfig, "CONFIG");
    out_.send(MsgType::kStart, 0, {start.p.x, start.p.y});
    const Frame f = expect(stream_, MsgType::kStart, "START");
    latest_.state = decode_state(f.payload, desc_.cable_count());
    latest_.plant_t_us = 0;
  }

  void simulated() {
    for (std::size_t k = 0; k < cycles_; ++k) {
      const std::int64_t now = static_cast<std::int64_t>(k) * cycle_us_;
      out_.send(MsgType::kTimeSyncReq, static_cast<std::uint64_t>(now),
                {static_cast<double>(now)});
      while (true) {
        const Frame f = stream_.receive();
        if (f.type == MsgType::kTimeSyncRep) break;
        if (f.type == MsgType::kError) throw_remote_error(f, "run");
        if (f.type == MsgType::kState) {
          latest_.state = decode_state(f.payload, desc_.cable_count());
          latest_.plant_t_us = static_cast<std::int64_t>(f.t_send_us);
        }
      }
      const Setpoint& sp = setpoint(k);
      log_.records.push_back(make_record(now, sp, latest_, now - latest_.plant_t_us));
      out_.send(MsgType::kSetpoint, static_cast<std::uint64_t>(now), sp.lengths.l);
    }
    out_.send(MsgType::kStop, static_cast<std::uint64_t>(cycles_) * cycle_us_);
    while (true) {
      const Frame f = stream_.receive();
      if (f.type == MsgType::kStop) return;
      if (f.type == MsgType::kError) throw_remote_error(f, "STOP");
    }
  }

  void realtime() {
    const auto origin = Clock::now();
    auto now_us = [&] {
      return std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - origin).count();
    };

    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::pair<std::int64_t, double>> sync_replies;  // (received at, plant time)
    bool stopped = false;
    bool closed = false;
    std::optional<Frame> remote_error;

    std::thread reader([&] {
      try {
        while (true) {
          const Frame f = stream_.receive();
          std::lock_guard lock(mu);
          if (f.type == MsgType::kState) {
            latest_.state = decode_state(f.payload, desc_.cable_count());
            latest_.plant_t_us = static_cast<std::int64_t>(f.t_send_us);
          } else if (f.type == MsgType::kTimeSyncRep && f.payload.size() == 2) {
            sync_replies.emplace_back(now_us(), f.payload[1]);
          } else if (f.type == MsgType::kStop) {
            stopped = true;
          } else if (f.type == MsgType::kError) {
            remote_error = f;
          }
          cv.notify_all();
        }
      } catch (const std::exception&) {
      }
      std::lock_guard lock(mu);
      closed = true;
      cv.notify_all();
    });

    struct ReaderGuard {
      Stream& s;
      std::thread& t;
      ~ReaderGuard() {
        s.shutdown_both();
        t.join();
      }
    } guard{stream_, reader};

    // Clock offset (plant minus controller) by the midpoint method, keeping
    // the exchange with the smallest round trip.
    std::int64_t offset = 0;
    std::int64_t best_rtt = std::numeric_limits<std::int64_t>::max();
    for (int i = 0; i < 5; ++i) {
      const std::int64_t sent = now_us();
      out_.send(MsgType::kTimeSyncReq, static_cast<std::uint64_t>(sent),
                {static_cast<double>(sent)});
      std::unique_lock lock(mu);
      if (!cv.wait_for(lock, std::chrono::seconds(5),
                       [&] { return !sync_replies.empty() || closed; }) ||
          sync_replies.empty()) {
        throw TransportError("no TIMESYNC reply");
      }
      const auto [received, plant_t] = sync_replies.front();
      sync_replies.pop_front();
      if (received - sent < best_rtt) {
        best_rtt = received - sent;
        offset = std::llround(plant_t) - (sent + received) / 2;
      }
    }

    const auto loop_origin = Clock::now();
    for (std::size_t k = 0; k < cycles_; ++k) {
      std::this_thread::sleep_until(loop_origin +
                                    std::chrono::microseconds(static_cast<std::int64_t>(k) * cycle_us_));
      const Setpoint& sp = setpoint(k);
      {
        std::lock_guard lock(mu);
        if (remote_error) throw_remote_error(*remote_error, "run");
        if (closed) throw TransportError("connection lost");
        const std::int64_t age = now_us() - (latest_.plant_t_us - offset);
        log_.records.push_back(
            make_record(static_cast<std::int64_t>(k) * cycle_us_, sp, latest_, age));
      }
      out_.send(MsgType::kSetpoint, static_cast<std::uint64_t>(now_us()), sp.lengths.l);
    }
    out_.send(MsgType::kStop, static_cast<std::uint64_t>(now_us()));
    std::unique_lock lock(mu);
    cv.wait_for(lock, std::chrono::seconds(5), [&] { return stopped || closed; });
  }

  Stream& stream_;
  FrameSender out_;
  const RobotDescription& desc_;
  const std::vector<Setpoint>& setpoints_;
  const ControllerOptions& opts_;
  const std::int64_t cycle_us_;
  std::size_t cycles_ = 0;
  Latest latest_;
  LoopLog log_;
};

}  // namespace

LoopLog run_controller(Stream& stream, const RobotDescription& desc,
                       const std::vector<Setpoint>& setpoints, const ControllerOptions& opts) {
  if (setpoints.empty()) throw ValidationError("no setpoints to stream");
  if (!(opts.cycle > 0.0)) throw ValidationError("cycle must be > 0");
  if (!(opts.tail_s >= 0.0)) throw ValidationError("tail must be >= 0");
  return Session(stream, desc, setpoints, opts).run();
}

LoopLog run_controller(const RobotDescription& desc, const TrajectoryPlan& plan,
                       const ControllerOptions& opts, const Endpoint& plant,
                       const std::filesystem::path& log_path) {
  const auto setpoints = sample(plan, desc, opts.cycle);
  Stream stream = Stream::connect(plant);
  LoopLog log = run_controller(stream, desc, setpoints, opts);
  write_loop_log(log, log_path);
  return log;
}

}  // namespace cdpr::net
