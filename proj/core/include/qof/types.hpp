#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "qof/bytes.hpp"
#include "qof/crypto.hpp"
#include "qof/errors.hpp"

namespace qof {

/// Index of a party in [0, n). The total order over indices is the canonical
/// tie-break order everywhere a deterministic choice among parties is needed.
struct PartyId {
  std::uint32_t index = 0;

  auto operator<=>(const PartyId&) const = default;
};

/// Protocol parameters shared by every module.
struct Config {
  std::uint32_t n = 4;             // party count
  std::uint32_t f = 1;             // tolerated faults, requires n > 3f
  std::uint32_t kappa = 0;         // order-fairness parameter
  std::uint32_t round_trigger = 1; // min new transactions to start a round
  std::uint32_t batch_cap = 16;    // max values per sequencer block

  void validate() const {
    if (n == 0 || n <= 3 * f) throw ConfigError("config requires n > 3f");
    if (round_trigger < 1) throw ConfigError("round_trigger must be >= 1");
    if (batch_cap < 1) throw ConfigError("batch_cap must be >= 1");
  }

  std::uint32_t quorum() const { return (n + f + 2) / 2; }  // ceil((n+f+1)/2)
  std::uint32_t status_threshold() const { return n - f; }
};

inline constexpr std::size_t kMaxPayloadSize = 4096;

/// Client-submitted opaque payload; the unit of ordering. Identity is the
/// digest of (client_id, client_seq, payload), so equal fields always map to
/// the same id and cross-party dedup needs no coordination.
struct Transaction {
  Digest id{};
  std::uint32_t client_id = 0;
  std::uint64_t client_seq = 0;
  Bytes payload;

  static Transaction make(std::uint32_t client_id, std::uint64_t client_seq,
                          Bytes payload) {
    if (payload.size() > kMaxPayloadSize)
      throw ConfigError("payload exceeds maximum size");
    Transaction tx;
    tx.client_id = client_id;
    tx.client_seq = client_seq;
    tx.payload = std::move(payload);
    tx.id = digest(tx.canonical_bytes());
    return tx;
  }

  Bytes canonical_bytes() const {
    ByteWriter w;
    w.u32(client_id);
    w.u64(client_seq);
    w.bytes(payload);
    return w.take();
  }

  void serialize(ByteWriter& w) const {
    w.u32(client_id);
    w.u64(client_seq);
    w.bytes(payload);
  }

  static Transaction parse(ByteReader& r) {
    std::uint32_t client = r.u32();
    std::uint64_t seq = r.u64();
    Bytes payload = r.bytes();
    if (payload.size() > kMaxPayloadSize)
      throw ParseError("payload exceeds maximum size");
    return make(client, seq, std::move(payload));
  }

  bool operator==(const Transaction& other) const { return id == other.id; }
};

/// Per-party delivery counters: counts[j] is the number of transactions
/// bcch-delivered from party j. Entries only grow at any single party.
struct VectorClock {
  std::vector<std::uint64_t> counts;

  explicit VectorClock(std::uint32_t n = 0) : counts(n, 0) {}

  std::uint64_t& operator[](std::uint32_t j) { return counts.at(j); }
  std::uint64_t operator[](std::uint32_t j) const { return counts.at(j); }
  std::uint32_t size() const {
    return static_cast<std::uint32_t>(counts.size());
  }

  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (auto c : counts) s += c;
    return s;
  }

  void serialize(ByteWriter& w) const {
    w.u32(size());
    for (auto c : counts) w.u64(c);
  }

  static VectorClock parse(ByteReader& r, std::uint32_t expect_n) {
    std::uint32_t n = r.u32();
    if (n != expect_n) throw ParseError("vector clock length mismatch");
    VectorClock vc(n);
    for (std::uint32_t j = 0; j < n; ++j) vc.counts[j] = r.u64();
    return vc;
  }

  bool operator==(const VectorClock&) const = default;
};

/// Componentwise order; a partial order on clocks of equal length.
inline bool vc_leq(const VectorClock& a, const VectorClock& b) {
  if (a.size() != b.size()) return false;
  for (std::uint32_t j = 0; j < a.size(); ++j)
    if (a[j] > b[j]) return false;
  return true;
}

}  // namespace qof
