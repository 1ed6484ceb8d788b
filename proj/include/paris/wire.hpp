#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "paris/messages.hpp"

namespace paris {

// Frame layout:
//   u32 big-endian length of everything after it (tag + body)
//   u8  tag (Message alternative index + 1; 0 is the connection hello)
//   body: fields in declaration order, integers little-endian, strings and
//         vectors prefixed by a u32 little-endian count.

using Bytes = std::vector<std::uint8_t>;

/// decode() was given fewer bytes than the frame announces.
class NeedMoreBytes : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed frame: unknown tag, bad lengths, trailing bytes.
class WireError : public ProtocolFault {
 public:
  using ProtocolFault::ProtocolFault;
};

inline constexpr std::size_t kFrameHeaderSize = 5;
inline constexpr std::uint32_t kMaxFrameSize = 64u << 20;

Bytes encode(const Message& msg);
/// Decodes exactly one frame occupying all of bytes.
Message decode(const Bytes& bytes);

/// Decodes the first frame in [data, data + size) if it is complete and
/// reports how many bytes it used.
std::optional<Message> try_decode(const std::uint8_t* data, std::size_t size, std::size_t& consumed);

/// First frame on every connection: identifies the sender.
Bytes encode_hello(const Address& from);
std::optional<Address> try_decode_hello(const std::uint8_t* data, std::size_t size, std::size_t& consumed);

}  // namespace paris
