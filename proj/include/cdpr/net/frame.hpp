#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cdpr/model.hpp"
#include "cdpr/statics.hpp"

namespace cdpr::net {

// Wire layout, little-endian throughout:
//
//   offset size field
//        0    4 magic "CDPR"
//        4    1 version (1)
//        5    1 msg_type
//        6    2 flags (0)
//        8    4 seq
//       12    8 t_send_us
//       20    2 payload_len
//       22    n payload: payload_len / 8 IEEE-754 doubles

inline constexpr std::size_t kHeaderSize = 22;
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kMaxDoubles = 0xFFFF / 8;

enum class MsgType : std::uint8_t {
  kHello = 0x01,     // [robot hash]
  kConfig = 0x02,    // [cycle_s, time_mode]
  kStart = 0x03,     // request: [x, y]; reply: state payload
  kSetpoint = 0x04,  // [l_1 .. l_m]
  kState = 0x05,     // [x, y, l_1 .. l_m, T_1 .. T_m]
  kStop = 0x06,
  kTimeSyncReq = 0x07,  // [t_us]
  kTimeSyncRep = 0x08,  // [t_us of the request, responder clock t_us]
  kError = 0x7F,        // [error code]
};

/// Codes carried by ERROR frames.
enum class ErrorCode : int {
  kMalformed = 1,
  kUnexpectedMessage = 2,
  kHashMismatch = 3,
  kBadConfig = 4,
  kBadStart = 5,
  kPlantFailure = 6,
};

enum class TimeMode : int {
  kRealTime = 0,
  /// Virtual clock carried by TIMESYNC requests; the plant advances exactly
  /// to each requested time, so runs are reproducible bit for bit.
  kSimulated = 1,
};

struct Frame {
  MsgType type = MsgType::kStop;
  std::uint16_t flags = 0;
  std::uint32_t seq = 0;
  std::uint64_t t_send_us = 0;
  std::vector<double> payload;

  friend bool operator==(const Frame&, const Frame&) = default;
};

bool is_known_type(std::uint8_t type);

/// Throws ProtocolError when the payload is too long to encode.
std::vector<std::uint8_t> encode_frame(const Frame& frame);

/// Validates a header and returns the payload length in bytes.
/// Throws ProtocolError for bad magic, unknown version or message type, or a
/// payload length that is not a multiple of 8.
std::size_t parse_header(std::span<const std::uint8_t> header);

/// Decodes one complete frame occupying exactly `bytes`. Throws ProtocolError,
/// including for a truncated payload or trailing bytes.
Frame decode_frame(std::span<const std::uint8_t> bytes);

/// Pose, measured axis lengths and tensions as sent in STATE frames.
struct StatePayload {
  Pose pose;
  CableLengths lengths;
  TensionVector tensions;
};

std::vector<double> encode_state(const StatePayload& s);
/// Throws ProtocolError if the payload size does not match the cable count.
StatePayload decode_state(const std::vector<double>& payload, std::size_t cable_count);

}  // namespace cdpr::net
