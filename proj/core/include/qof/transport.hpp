#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <vector>

#include "qof/bytes.hpp"
#include "qof/crypto.hpp"
#include "qof/types.hpp"

namespace qof::net {

/// Raw frame fabric between parties. Implementations deliver opaque frames;
/// authentication, filtering and framing semantics live in AuthLinks above.
class FrameNetwork {
 public:
  virtual ~FrameNetwork() = default;
  virtual void send_frame(PartyId from, PartyId to, Bytes frame) = 0;
  virtual void register_sink(PartyId to,
                             std::function<void(Bytes)> sink) = 0;
};

struct LinkStats {
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped_mac = 0;
  std::uint64_t dropped_replay = 0;
  std::uint64_t dropped_malformed = 0;
};

enum class FilterAction { Pass, Drop };

struct FilterResult {
  FilterAction action = FilterAction::Pass;
  Bytes body;  // replacement body when action == Pass and rewritten
  bool rewritten = false;
};

/// Outbound interceptor used by the harness to implement Byzantine parties
/// as wrappers around a correct implementation. Runs before the MAC is
/// computed, so mutated messages still authenticate as coming from the
/// faulty party itself.
using OutboundFilter =
    std::function<FilterResult(PartyId to, const Bytes& body)>;

/// Authenticated perfect point-to-point links for one party.
///
/// Guarantees, with both endpoints correct:
///  - reliable delivery: every body sent is delivered exactly once,
///  - no duplication: replayed frames are dropped via per-link sequence
///    numbers,
///  - authenticity: a delivered (from, body) was sent by `from`; frames
///    whose HMAC does not verify are dropped and counted, never surfaced.
class AuthLinks {
 public:
  using DeliverFn = std::function<void(PartyId from, const Bytes& body)>;

  AuthLinks(PartyId self, const KeyMaterial& keys, FrameNetwork& net);

  void set_deliver(DeliverFn fn) { deliver_ = std::move(fn); }
  void set_outbound_filter(OutboundFilter f) { filter_ = std::move(f); }

  void send(PartyId to, const Bytes& body);

  /// Sends to every configured party; include_self routes a copy through the
  /// network to this party as well.
  void broadcast(const Bytes& body, bool include_self);

  std::uint32_t n() const {
    return static_cast<std::uint32_t>(keys_->public_keys.size());
  }
  PartyId self() const { return self_; }
  const LinkStats& stats() const { return stats_; }

 private:
  void on_frame(const Bytes& frame);

  PartyId self_;
  const KeyMaterial* keys_;
  FrameNetwork* net_;
  DeliverFn deliver_;
  OutboundFilter filter_;
  std::vector<std::uint64_t> send_seq_;        // per destination
  std::vector<std::set<std::uint64_t>> seen_;  // per source, replay filter
  LinkStats stats_;
};

}  // namespace qof::net
