#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>

#include "qof/crypto.hpp"
#include "qof/types.hpp"

namespace qof::vbc {

/// One status-message row: a party's vector clock and its signature over
/// (round, clock).
struct ClockRow {
  VectorClock vc;
  Signature sig{};
};

/// The consensus proposal of a round: at least n-f signed vector clocks.
struct ClockMatrix {
  std::uint64_t round = 0;
  std::map<std::uint32_t, ClockRow> rows;  // party -> row

  void serialize(ByteWriter& w) const;
  static ClockMatrix parse(ByteReader& r, std::uint32_t n);
};

/// Bytes a party signs in its status message for a round. Binding the round
/// number means a row signed for round r-1 cannot be presented for round r.
Bytes status_sign_bytes(std::uint64_t round, const VectorClock& vc);

/// External-validity predicate: every row's signature verifies over
/// (matrix.round, row.vc) under the row party's key, every clock has length
/// n, and there are at least n-f rows, which is what downstream cut
/// computation relies on.
bool predicate_p(const ClockMatrix& m, const Config& cfg, const KeyView& keys,
                 VerifyCache& vc);

/// Pluggable atomic broadcast (total-order broadcast) under the consensus
/// adapter. All correct parties deliver the same value sequence.
class Abc {
 public:
  virtual ~Abc() = default;

  virtual void broadcast(Bytes value) = 0;

  /// Delivery callback, invoked in total order.
  std::function<void(const Bytes&)> deliver;

  /// Value admission: checked by the leader before a value enters a block
  /// and by every party when a block is delivered. Defaults to accept-all.
  std::function<bool(const Bytes&)> admissible;
};

struct VbcState {
  bool in_round = false;
  std::uint64_t rp = 0;  // proposals so far (current round when in_round)
  std::uint64_t rd = 0;  // decisions so far
};

/// Validated Byzantine consensus over atomic broadcast.
///
/// propose(v) tags v with the next round number and abc-broadcasts it; the
/// first valid round-r value in the delivered total order decides round r.
/// A value for a round we have not proposed yet is buffered instead of
/// discarded and consumed at propose time, so every party decides the same
/// (globally first) proposal even when its own propose lags the winner's
/// delivery. rd <= rp <= rd+1 holds throughout.
class Endpoint {
 public:
  using DecideFn = std::function<void(std::uint64_t round, const ClockMatrix&)>;

  Endpoint(const Config& cfg, PartyId self, const KeyView& keys, Abc& abc,
           VerifyCache& verify_cache, DecideFn on_decide);

  /// Proposes for round rp+1. The matrix round must match and must satisfy
  /// the predicate locally; proposing while a round is open is a protocol
  /// misuse error.
  void propose(const ClockMatrix& value);

  const VbcState& state() const { return state_; }
  std::uint64_t discarded() const { return discarded_; }

  /// Serialization of the tagged proposal value carried by the ABC.
  static Bytes encode_value(const ClockMatrix& m);
  static std::optional<ClockMatrix> decode_value(const Bytes& w,
                                                 std::uint32_t n);

 private:
  void on_abc_deliver(const Bytes& w);
  void decide(std::uint64_t round, const ClockMatrix& m);

  Config cfg_;
  PartyId self_;
  KeyView keys_;
  Abc* abc_;
  VerifyCache* verify_cache_;
  DecideFn on_decide_;
  VbcState state_;
  std::map<std::uint64_t, ClockMatrix> buffered_;  // first valid value per round
  std::uint64_t discarded_ = 0;
};

}  // namespace qof::vbc
