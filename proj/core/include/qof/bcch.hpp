#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "qof/crypto.hpp"
#include "qof/transport.hpp"
#include "qof/types.hpp"

namespace qof::bcch {

/// A transaction delivered by the channel: (from_process, round) uniquely
/// identifies the instance; at most one value is ever delivered for it at
/// any correct party.
struct BcchMessage {
  Transaction tx;
  std::uint64_t round = 0;   // instance number on the sender's channel
  PartyId from_process{};
  Digest id{};               // digest of (sender, round, tx id)
};

/// Quorum of signed echoes binding one message digest to one instance.
/// Valid only with >= ceil((n+f+1)/2) distinct signers, which makes two
/// certificates for the same instance but different digests impossible:
/// any two quorums meet in a correct party, and correct parties echo at
/// most one digest per instance.
struct EchoCertificate {
  std::uint32_t sender = 0;
  std::uint64_t round = 0;
  Digest msg_digest{};
  std::vector<std::pair<std::uint32_t, Signature>> sigs;

  void serialize(ByteWriter& w) const;
  static EchoCertificate parse(ByteReader& r);

  static Bytes echo_sign_bytes(std::uint32_t sender, std::uint64_t round,
                               const Digest& msg_digest);

  bool valid(const Config& cfg, const KeyView& keys, VerifyCache& vc) const;
};

struct ChannelStats {
  std::uint64_t delivered = 0;
  std::uint64_t duplicate_sends = 0;     // second SEND for an echoed instance
  std::uint64_t bad_echo_sigs = 0;
  std::uint64_t bad_certs = 0;
  std::uint64_t stale_finals = 0;        // replay of an already-delivered instance
  std::uint64_t window_drops = 0;
};

/// FIFO Byzantine consistent broadcast channel endpoint for one party.
///
/// For every sender the channel runs a sequence of signed-echo-broadcast
/// instances. Per sender, deliveries happen in instance order with no gaps;
/// the certificate of every delivered instance is retained so a missing
/// transaction can later be transferred to another party verifiably.
class Channel {
 public:
  using DeliverFn =
      std::function<void(const BcchMessage&, const EchoCertificate&)>;

  Channel(const Config& cfg, PartyId self, const KeyView& keys,
          net::AuthLinks& links, VerifyCache& verify_cache);

  void set_deliver(DeliverFn fn) { deliver_ = std::move(fn); }

  /// Queues tx on this party's own channel. Returns false when the pending
  /// queue is full (backpressure); the transaction is not queued then.
  bool broadcast(const Transaction& tx);

  /// Wire input, body already stripped of the mux tag.
  void on_message(PartyId from, ByteReader& r);

  /// Injects a certified final obtained out-of-band (missing-transaction
  /// transfer). Returns true if the certificate checked out; delivery still
  /// happens in FIFO position like a network final.
  bool accept_external_final(std::uint32_t sender, std::uint64_t round,
                             const Transaction& tx,
                             const EchoCertificate& cert);

  /// Delivered instance lookup for serving missing-transaction requests.
  const std::pair<Transaction, EchoCertificate>* stored(
      std::uint32_t sender, std::uint64_t round) const;

  std::uint64_t delivered_count(std::uint32_t sender) const {
    return receivers_.at(sender).next_deliver;
  }

  const ChannelStats& stats() const { return stats_; }

  static constexpr std::uint64_t kFinalWindow = 64;
  static constexpr std::size_t kPendingBound = 4096;

 private:
  struct SenderInstance {  // state of our own active instance
    std::uint64_t round = 0;
    Transaction tx;
    Digest msg_digest{};
    std::map<std::uint32_t, Signature> echoes;
    bool final_sent = false;
  };

  struct ReceiverState {  // per remote sender
    std::uint64_t next_deliver = 0;
    std::map<std::uint64_t, Digest> echoed;  // instance -> digest we echoed
    std::map<std::uint64_t, std::pair<Transaction, EchoCertificate>> buffered;
    std::vector<std::pair<Transaction, EchoCertificate>> log;  // by round
  };

  void start_next_instance();
  void handle_send(PartyId from, ByteReader& r);
  void handle_echo(PartyId from, ByteReader& r);
  void handle_final(PartyId from, ByteReader& r);
  bool admit_final(std::uint32_t sender, std::uint64_t round,
                   const Transaction& tx, const EchoCertificate& cert);
  void drain(std::uint32_t sender);

  Config cfg_;
  PartyId self_;
  KeyView keys_;
  net::AuthLinks* links_;
  VerifyCache* verify_cache_;
  DeliverFn deliver_;

  std::deque<Transaction> pending_;
  std::optional<SenderInstance> active_;
  std::uint64_t next_round_ = 0;

  std::vector<ReceiverState> receivers_;
  ChannelStats stats_;
};

}  // namespace qof::bcch
