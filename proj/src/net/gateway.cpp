#include "cdpr/net/gateway.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include "cdpr/error.hpp"

namespace cdpr::net {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kReverseSeedSalt = 0x9E3779B97F4A7C15ULL;

struct Held {
  std::int64_t release_us;
  Frame frame;
};

class SimulatedRelay {
 public:
  SimulatedRelay(Stream& controller, Stream& plant, const GatewayConfig& cfg, GatewayStats& stats)
      : ctrl_(controller), plant_(plant), to_ctrl_(controller), to_plant_(plant),
        forward_(cfg.base_delay_ms, cfg.jitter_ms, cfg.seed),
        backward_(cfg.base_delay_ms, cfg.jitter_ms, cfg.seed ^ kReverseSeedSalt),
        stats_(stats) {}

  void run() {
    while (true) {
      Frame f = ctrl_.receive();
      switch (f.type) {
        case MsgType::kStart: {
          plant_.send(f);
          const Frame reply = plant_.receive();
          ctrl_.send(reply);
          if (reply.type == MsgType::kError) return;
          break;
        }
        case MsgType::kTimeSyncReq: {
          if (f.payload.size() != 1) throw ProtocolError("TIMESYNC request needs a time", 1);
          const auto now = static_cast<std::int64_t>(std::llround(f.payload[0]));
          if (!tick(now)) return;
          to_ctrl_.send(MsgType::kTimeSyncRep, static_cast<std::uint64_t>(now),
                        {f.payload[0], f.payload[0]});
          break;
        }
        case MsgType::kStop: {
          plant_.send(f);
          while (true) {
            const Frame reply = plant_.receive();
            if (reply.type == MsgType::kStop || reply.type == MsgType::kError) {
              ctrl_.send(reply);
              return;
            }
          }
        }
        default:
          to_plant_queue_.push_back(
              {forward_.release_us(static_cast<std::int64_t>(f.t_send_us)), std::move(f)});
      }
    }
  }

 private:
  // Delivers everything due by `now` in both directions. False if the plant
  // reported an error (already relayed to the controller).
  bool tick(std::int64_t now) {
    while (!to_plant_queue_.empty() && to_plant_queue_.front().release_us <= now) {
      if (!advance_plant(to_plant_queue_.front().release_us)) return false;
      plant_.send(to_plant_queue_.front().frame);
      ++stats_.to_plant;
      to_plant_queue_.pop_front();
    }
    if (!advance_plant(now)) return false;
    while (!to_ctrl_queue_.empty() && to_ctrl_queue_.front().release_us <= now) {
      ctrl_.send(to_ctrl_queue_.front().frame);
      ++stats_.to_controller;
      to_ctrl_queue_.pop_front();
    }
    return true;
  }

  bool advance_plant(std::int64_t t_us) {
    to_plant_.send(MsgType::kTimeSyncReq, static_cast<std::uint64_t>(t_us),
                   {static_cast<double>(t_us)});
    while (true) {
      Frame r = plant_.receive();
      if (r.type == MsgType::kTimeSyncRep) return true;
      if (r.type == MsgType::kError) {
        ctrl_.send(r);
        return false;
      }
      to_ctrl_queue_.push_back(
          {backward_.release_us(static_cast<std::int64_t>(r.t_send_us)), std::move(r)});
    }
  }

  Stream& ctrl_;
  Stream& plant_;
  FrameSender to_ctrl_;
  FrameSender to_plant_;
  DelaySchedule forward_;
  DelaySchedule backward_;
  std::deque<Held> to_plant_queue_;
  std::deque<Held> to_ctrl_queue_;
  GatewayStats& stats_;
};

// One direction of the real-time relay: a reader thread stamps arrivals,
// a writer thread releases frames on schedule.
class Pump {
 public:
  Pump(Stream& src, Stream& dst, DelaySchedule schedule, Clock::time_point origin,
       std::uint64_t& counter, std::function<void()> on_failure)
      : src_(src), dst_(dst), schedule_(std::move(schedule)), origin_(origin),
        counter_(counter), on_failure_(std::move(on_failure)) {}

  void start() {
    reader_ = std::thread([this] { read_loop(); });
    writer_ = std::thread([this] { write_loop(); });
  }
  void join() {
    reader_.join();
    writer_.join();
  }

 private:
  std::int64_t now_us() const {
    return std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - origin_).count();
  }

  void read_loop() {
    try {
      while (true) {
        Frame f = src_.receive();
        const std::int64_t release = schedule_.release_us(now_us());
        std::lock_guard lock(mu_);
        queue_.push_back({release, std::move(f)});
        cv_.notify_one();
      }
    } catch (const std::exception&) {
    }
    std::lock_guard lock(mu_);
    closed_ = true;
    cv_.notify_one();
  }

  void write_loop() {
    try {
      while (true) {
        Held h;
        {
          std::unique_lock lock(mu_);
          cv_.wait(lock, [&] { return !queue_.empty() || closed_; });
          if (queue_.empty()) break;
          h = std::move(queue_.front());
          queue_.pop_front();
        }
        std::this_thread::sleep_until(origin_ + std::chrono::microseconds(h.release_us));
        dst_.send(h.frame);
        ++counter_;
      }
      dst_.shutdown_write();
    } catch (const std::exception&) {
      on_failure_();
    }
  }

  Stream& src_;
  Stream& dst_;
  DelaySchedule schedule_;
  Clock::time_point origin_;
  std::uint64_t& counter_;
  std::function<void()> on_failure_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Held> queue_;
  bool closed_ = false;
  std::thread reader_;
  std::thread writer_;
};

}  // namespace

DelaySchedule::DelaySchedule(double base_ms, double jitter_ms, std::uint64_t seed)
    : base_us_(base_ms * 1000.0), jitter_us_(jitter_ms * 1000.0), rng_(seed) {
  if (!(base_ms >= 0.0) || !(jitter_ms >= 0.0))
    throw ValidationError("gateway delays must be >= 0");
}

std::int64_t DelaySchedule::sample_delay_us() {
  // 53-bit uniform in [0, 1), independent of the standard library's
  // distribution implementation.
  const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  const double d = base_us_ + jitter_us_ * (2.0 * u - 1.0);
  return std::max<std::int64_t>(0, std::llround(d));
}

std::int64_t DelaySchedule::release_us(std::int64_t arrival_us) {
  last_release_ = std::max(arrival_us + sample_delay_us(), last_release_);
  return last_release_;
}

GatewayStats run_gateway_session(Stream& controller, Stream& plant, const GatewayConfig& cfg) {
  GatewayStats stats;
  // Lockstep handshake up to and including the CONFIG reply.
  TimeMode mode = TimeMode::kSimulated;
  while (true) {
    const Frame f = controller.receive();
    plant.send(f);
    const Frame reply = plant.receive();
    controller.send(reply);
    if (reply.type == MsgType::kError || reply.type == MsgType::kStop) return stats;
    if (reply.type == MsgType::kConfig) {
      if (reply.payload.size() != 2) throw ProtocolError("CONFIG reply needs 2 values", 1);
      mode = reply.payload[1] == 1.0 ? TimeMode::kSimulated : TimeMode::kRealTime;
      break;
    }
  }

  if (mode == TimeMode::kSimulated) {
    SimulatedRelay(controller, plant, cfg, stats).run();
    return stats;
  }

  const auto origin = Clock::now();
  auto tear_down = [&] {
    controller.shutdown_both();
    plant.shutdown_both();
  };
  Pump down(controller, plant, DelaySchedule(cfg.base_delay_ms, cfg.jitter_ms, cfg.seed), origin,
            stats.to_plant, tear_down);
  Pump up(plant, controller,
          DelaySchedule(cfg.base_delay_ms, cfg.jitter_ms, cfg.seed ^ kReverseSeedSalt), origin,
          stats.to_controller, tear_down);
  down.start();
  up.start();
  down.join();
  up.join();
  return stats;
}

GatewayStats run_gateway(const Endpoint& listen, const Endpoint& upstream,
                         const GatewayConfig& cfg,
                         const std::function<void(std::uint16_t)>& on_listening) {
  DelaySchedule check(cfg.base_delay_ms, cfg.jitter_ms, cfg.seed);
  Listener listener(listen);
  if (on_listening) on_listening(listener.port());
  Stream controller = listener.accept();
  Stream plant = Stream::connect(upstream);
  return run_gateway_session(controller, plant, cfg);
}

}  // namespace cdpr::net
