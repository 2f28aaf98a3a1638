#include "qof/vbc.hpp"

#include "qof/errors.hpp"

namespace qof::vbc {

namespace {
constexpr std::string_view kVbcTag = "vbc";
}

void ClockMatrix::serialize(ByteWriter& w) const {
  w.u64(round);
  w.u32(static_cast<std::uint32_t>(rows.size()));
  for (const auto& [party, row] : rows) {
    w.u32(party);
    row.vc.serialize(w);
    w.raw(row.sig);
  }
}

ClockMatrix ClockMatrix::parse(ByteReader& r, std::uint32_t n) {
  ClockMatrix m;
  m.round = r.u64();
  std::uint32_t count = r.u32();
  if (count > n) throw ParseError("clock matrix with more rows than parties");
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t party = r.u32();
    if (party >= n) throw ParseError("clock matrix row for unknown party");
    ClockRow row;
    row.vc = VectorClock::parse(r, n);
    auto s = r.raw(kSignatureSize);
    std::copy(s.begin(), s.end(), row.sig.begin());
    if (!m.rows.emplace(party, std::move(row)).second)
      throw ParseError("duplicate clock matrix row");
  }
  return m;
}

Bytes status_sign_bytes(std::uint64_t round, const VectorClock& vc) {
  ByteWriter w;
  w.u64(round);
  vc.serialize(w);
  return w.take();
}

bool predicate_p(const ClockMatrix& m, const Config& cfg, const KeyView& keys,
                 VerifyCache& vc) {
  if (m.rows.size() < cfg.status_threshold()) return false;
  for (const auto& [party, row] : m.rows) {
    if (party >= cfg.n || row.vc.size() != cfg.n) return false;
    Bytes msg = status_sign_bytes(m.round, row.vc);
    if (!vc.verify(keys.public_key(party), SignDomain::Status, msg, row.sig))
      return false;
  }
  return true;
}

Endpoint::Endpoint(const Config& cfg, PartyId self, const KeyView& keys,
                   Abc& abc, VerifyCache& verify_cache, DecideFn on_decide)
    : cfg_(cfg),
      self_(self),
      keys_(keys),
      abc_(&abc),
      verify_cache_(&verify_cache),
      on_decide_(std::move(on_decide)) {
  abc_->deliver = [this](const Bytes& w) { on_abc_deliver(w); };
  abc_->admissible = [this](const Bytes& w) {
    auto m = decode_value(w, cfg_.n);
    return m && predicate_p(*m, cfg_, keys_, *verify_cache_);
  };
}

Bytes Endpoint::encode_value(const ClockMatrix& m) {
  ByteWriter w;
  w.str(kVbcTag);
  m.serialize(w);
  return w.take();
}

std::optional<ClockMatrix> Endpoint::decode_value(const Bytes& w,
                                                  std::uint32_t n) {
  try {
    ByteReader r(w);
    if (r.str() != kVbcTag) return std::nullopt;
    ClockMatrix m = ClockMatrix::parse(r, n);
    r.expect_done();
    return m;
  } catch (const ParseError&) {
    return std::nullopt;
  }
}

void Endpoint::propose(const ClockMatrix& value) {
  if (state_.in_round)
    throw ProtocolMisuse("vbc-propose while a round is open");
  require(value.round == state_.rp + 1, "vbc-propose round mismatch");
  require(predicate_p(value, cfg_, keys_, *verify_cache_),
          "vbc-propose value fails predicate");

  state_.rp += 1;
  state_.in_round = true;

  auto buffered = buffered_.find(state_.rp);
  if (buffered != buffered_.end()) {
    // The round's first proposal was already delivered by the ABC before we
    // proposed; adopt it so every party decides the same value.
    ClockMatrix m = std::move(buffered->second);
    buffered_.erase(buffered);
    decide(state_.rp, m);
    return;
  }
  abc_->broadcast(encode_value(value));
}

void Endpoint::on_abc_deliver(const Bytes& w) {
  auto decoded = decode_value(w, cfg_.n);
  if (!decoded) return;  // some other component's value
  const std::uint64_t r = decoded->round;
  if (r <= state_.rd) {
    ++discarded_;  // later proposal for an already-decided round
    return;
  }
  if (!predicate_p(*decoded, cfg_, keys_, *verify_cache_)) {
    ++discarded_;  // decided values must be validated
    return;
  }
  if (state_.in_round && r == state_.rp) {
    decide(r, *decoded);
    return;
  }
  if (r > state_.rp) {
    buffered_.emplace(r, std::move(*decoded));  // keep the round's first value
    return;
  }
  ++discarded_;
}

void Endpoint::decide(std::uint64_t round, const ClockMatrix& m) {
  state_.rd = round;
  state_.in_round = false;
  buffered_.erase(buffered_.begin(), buffered_.upper_bound(round));
  if (on_decide_) on_decide_(round, m);
}

}  // namespace qof::vbc
