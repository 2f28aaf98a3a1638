#pragma once

#include <cstdint>

#include "qof/bytes.hpp"

namespace qof::net {

// Multiplexing tags: first body byte routes a link message to a component.
inline constexpr std::uint8_t kMuxBcch = 1;
inline constexpr std::uint8_t kMuxAbc = 2;
inline constexpr std::uint8_t kMuxEngine = 3;

inline Bytes mux(std::uint8_t tag, const Bytes& payload) {
  Bytes out;
  out.reserve(payload.size() + 1);
  out.push_back(tag);
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

}  // namespace qof::net
