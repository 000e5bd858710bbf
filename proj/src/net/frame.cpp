#include "cdpr/net/frame.hpp"

#include <bit>
#include <string>

#include "cdpr/error.hpp"

namespace cdpr::net {

namespace {

constexpr std::uint8_t kMagic[4] = {'C', 'D', 'P', 'R'};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

template <typename T>
T get_le(std::span<const std::uint8_t> in, std::size_t offset) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(static_cast<T>(in[offset + i]) << (8 * i));
  }
  return value;
}

}  // namespace

bool is_known_type(std::uint8_t type) {
  return (type >= 0x01 && type <= 0x08) || type == 0x7F;
}

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
  if (frame.payload.size() > kMaxDoubles) throw ProtocolError("payload too long");
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + 8 * frame.payload.size());
  for (std::uint8_t b : kMagic) out.push_back(b);
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(frame.type));
  put_le<std::uint16_t>(out, frame.flags);
  put_le<std::uint32_t>(out, frame.seq);
  put_le<std::uint64_t>(out, frame.t_send_us);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(8 * frame.payload.size()));
  for (double d : frame.payload) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(d));
  return out;
}

std::size_t parse_header(std::span<const std::uint8_t> header) {
  if (header.size() < kHeaderSize) throw ProtocolError("truncated header", 1);
  for (std::size_t i = 0; i < 4; ++i) {
    if (header[i] != kMagic[i]) throw ProtocolError("bad magic", 1);
  }
  if (header[4] != kVersion)
    throw ProtocolError("unknown version " + std::to_string(header[4]), 1);
  if (!is_known_type(header[5]))
    throw ProtocolError("unknown message type " + std::to_string(header[5]), 1);
  const auto len = get_le<std::uint16_t>(header, 20);
  if (len % 8 != 0) throw ProtocolError("payload length not a multiple of 8", 1);
  return len;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
  const std::size_t len = parse_header(bytes);
  if (bytes.size() < kHeaderSize + len) throw ProtocolError("truncated payload", 1);
  if (bytes.size() > kHeaderSize + len) throw ProtocolError("trailing bytes after frame", 1);
  Frame f;
  f.type = static_cast<MsgType>(bytes[5]);
  f.flags = get_le<std::uint16_t>(bytes, 6);
  f.seq = get_le<std::uint32_t>(bytes, 8);
  f.t_send_us = get_le<std::uint64_t>(bytes, 12);
  f.payload.reserve(len / 8);
  for (std::size_t off = kHeaderSize; off < kHeaderSize + len; off += 8) {
    f.payload.push_back(std::bit_cast<double>(get_le<std::uint64_t>(bytes, off)));
  }
  return f;
}

std::vector<double> encode_state(const StatePayload& s) {
  std::vector<double> out{s.pose.p.x, s.pose.p.y};
  out.insert(out.end(), s.lengths.l.begin(), s.lengths.l.end());
  out.insert(out.end(), s.tensions.t.begin(), s.tensions.t.end());
  return out;
}

StatePayload decode_state(const std::vector<double>& payload, std::size_t cable_count) {
  if (payload.size() != 2 + 2 * cable_count)
    throw ProtocolError("STATE payload has " + std::to_string(payload.size()) +
                        " doubles, expected " + std::to_string(2 + 2 * cable_count), 1);
  StatePayload s;
  s.pose.p = {payload[0], payload[1]};
  const auto m = static_cast<std::ptrdiff_t>(cable_count);
  s.lengths.l.assign(payload.begin() + 2, payload.begin() + 2 + m);
  s.tensions.t.assign(payload.begin() + 2 + m, payload.end());
  return s;
}

}  // namespace cdpr::net
