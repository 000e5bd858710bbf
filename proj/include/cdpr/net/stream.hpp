#pragma once

#include <cstdint>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cdpr/net/frame.hpp"

namespace cdpr::net {

/// "host:port"; port 0 asks the OS for an ephemeral port when listening.
struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  static Endpoint parse(const std::string& text);
  std::string str() const { return host + ":" + std::to_string(port); }
};

/// Reliable ordered byte stream over a socket descriptor (TCP or a local
/// socket pair). Owns the descriptor. Frame writes are serialised so several
/// threads may send on one stream; reads must come from a single thread.
class Stream {
 public:
  Stream() = default;
  explicit Stream(int fd) : fd_(fd) {}
  ~Stream();
  Stream(Stream&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Stream& operator=(Stream&& other) noexcept;
  Stream(const Stream&) = delete;
  Stream& operator=(const Stream&) = delete;

  /// Throws TransportError when the connection is refused or unresolvable.
  static Stream connect(const Endpoint& ep);

  bool valid() const { return fd_ >= 0; }

  void write_all(std::span<const std::uint8_t> bytes);
  /// Throws TransportError on EOF or I/O failure.
  void read_exact(std::span<std::uint8_t> out);

  void send(const Frame& frame);
  /// Reads one frame. Throws ProtocolError for a corrupt header and
  /// TransportError when the peer disconnects (including mid-frame).
  Frame receive();

  /// Stops further sends; the peer sees EOF after pending data.
  void shutdown_write();
  /// Unblocks any thread blocked on this stream.
  void shutdown_both();
  void close();

 private:
  int fd_ = -1;
  std::mutex write_mu_;
};

/// Connected in-process pair (AF_UNIX stream sockets).
std::pair<Stream, Stream> socket_pair();

class Listener {
 public:
  /// Binds and listens. Throws TransportError.
  explicit Listener(const Endpoint& ep);
  ~Listener();
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  std::uint16_t port() const { return port_; }
  Stream accept();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

/// Sender-side frame numbering: seq strictly increasing per sender.
class FrameSender {
 public:
  explicit FrameSender(Stream& stream) : stream_(stream) {}

  void send(MsgType type, std::uint64_t t_send_us, std::vector<double> payload = {}) {
    std::lock_guard lock(mu_);
    stream_.send(Frame{type, 0, seq_++, t_send_us, std::move(payload)});
  }
  Stream& stream() { return stream_; }

 private:
  Stream& stream_;
  std::mutex mu_;
  std::uint32_t seq_ = 0;
};

}  // namespace cdpr::net
