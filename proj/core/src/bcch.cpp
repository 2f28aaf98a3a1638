#include "qof/bcch.hpp"

#include <set>

#include "qof/wire.hpp"

namespace qof::bcch {

namespace {

constexpr std::uint8_t kSend = 1;
constexpr std::uint8_t kEcho = 2;
constexpr std::uint8_t kFinal = 3;

Digest message_id(std::uint32_t sender, std::uint64_t round,
                  const Digest& tx_id) {
  ByteWriter w;
  w.u32(sender);
  w.u64(round);
  w.raw(tx_id);
  return digest(w.data());
}

}  // namespace

void EchoCertificate::serialize(ByteWriter& w) const {
  w.u32(sender);
  w.u64(round);
  w.raw(msg_digest);
  w.u32(static_cast<std::uint32_t>(sigs.size()));
  for (const auto& [party, sig] : sigs) {
    w.u32(party);
    w.raw(sig);
  }
}

EchoCertificate EchoCertificate::parse(ByteReader& r) {
  EchoCertificate c;
  c.sender = r.u32();
  c.round = r.u64();
  auto d = r.raw(kDigestSize);
  std::copy(d.begin(), d.end(), c.msg_digest.begin());
  std::uint32_t count = r.u32();
  if (count > 1024) throw ParseError("oversized certificate");
  c.sigs.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t party = r.u32();
    auto s = r.raw(kSignatureSize);
    Signature sig{};
    std::copy(s.begin(), s.end(), sig.begin());
    c.sigs.emplace_back(party, sig);
  }
  return c;
}

Bytes EchoCertificate::echo_sign_bytes(std::uint32_t sender,
                                       std::uint64_t round,
                                       const Digest& msg_digest) {
  ByteWriter w;
  w.u32(sender);
  w.u64(round);
  w.raw(msg_digest);
  return w.take();
}

bool EchoCertificate::valid(const Config& cfg, const KeyView& keys,
                            VerifyCache& vc) const {
  if (sigs.size() < cfg.quorum()) return false;
  Bytes msg = echo_sign_bytes(sender, round, msg_digest);
  std::set<std::uint32_t> signers;
  for (const auto& [party, sig] : sigs) {
    if (party >= cfg.n) return false;
    if (!signers.insert(party).second) return false;  // duplicate signer
    if (!vc.verify(keys.public_key(party), SignDomain::Echo, msg, sig))
      return false;
  }
  return signers.size() >= cfg.quorum();
}

Channel::Channel(const Config& cfg, PartyId self, const KeyView& keys,
                 net::AuthLinks& links, VerifyCache& verify_cache)
    : cfg_(cfg),
      self_(self),
      keys_(keys),
      links_(&links),
      verify_cache_(&verify_cache),
      receivers_(cfg.n) {}

bool Channel::broadcast(const Transaction& tx) {
  if (pending_.size() >= kPendingBound) return false;
  pending_.push_back(tx);
  start_next_instance();
  return true;
}

void Channel::start_next_instance() {
  if (active_ || pending_.empty()) return;
  SenderInstance inst;
  inst.round = next_round_++;
  inst.tx = pending_.front();
  pending_.pop_front();
  inst.msg_digest = digest(inst.tx.canonical_bytes());
  active_ = std::move(inst);

  ByteWriter w;
  w.u8(kSend);
  w.u64(active_->round);
  active_->tx.serialize(w);
  links_->broadcast(net::mux(net::kMuxBcch, w.data()), /*include_self=*/true);
}

void Channel::on_message(PartyId from, ByteReader& r) {
  switch (r.u8()) {
    case kSend:
      handle_send(from, r);
      break;
    case kEcho:
      handle_echo(from, r);
      break;
    case kFinal:
      handle_final(from, r);
      break;
    default:
      throw ParseError("unknown bcch message kind");
  }
}

void Channel::handle_send(PartyId from, ByteReader& r) {
  std::uint64_t round = r.u64();
  Transaction tx = Transaction::parse(r);
  r.expect_done();

  ReceiverState& rs = receivers_[from.index];
  if (round < rs.next_deliver) return;  // instance already delivered
  if (round >= rs.next_deliver + kFinalWindow) {
    ++stats_.window_drops;
    return;
  }

  Digest d = digest(tx.canonical_bytes());
  auto it = rs.echoed.find(round);
  if (it != rs.echoed.end()) {
    if (it->second != d) ++stats_.duplicate_sends;  // equivocation attempt
    return;  // echo at most one digest per instance
  }
  rs.echoed.emplace(round, d);

  Bytes msg = EchoCertificate::echo_sign_bytes(from.index, round, d);
  Signature sig = keys_.sign(SignDomain::Echo, msg);
  ByteWriter w;
  w.u8(kEcho);
  w.u64(round);
  w.raw(d);
  w.raw(sig);
  links_->send(from, net::mux(net::kMuxBcch, w.data()));
}

void Channel::handle_echo(PartyId from, ByteReader& r) {
  std::uint64_t round = r.u64();
  Digest d{};
  auto ds = r.raw(kDigestSize);
  std::copy(ds.begin(), ds.end(), d.begin());
  auto ss = r.raw(kSignatureSize);
  Signature sig{};
  std::copy(ss.begin(), ss.end(), sig.begin());
  r.expect_done();

  if (!active_ || active_->round != round || active_->msg_digest != d) return;
  Bytes msg = EchoCertificate::echo_sign_bytes(self_.index, round, d);
  if (!verify_cache_->verify(keys_.public_key(from.index), SignDomain::Echo,
                             msg, sig)) {
    ++stats_.bad_echo_sigs;
    return;
  }
  active_->echoes.emplace(from.index, sig);
  if (active_->echoes.size() < cfg_.quorum() || active_->final_sent) return;

  active_->final_sent = true;
  EchoCertificate cert;
  cert.sender = self_.index;
  cert.round = round;
  cert.msg_digest = d;
  for (const auto& [party, s] : active_->echoes) {
    cert.sigs.emplace_back(party, s);
    if (cert.sigs.size() == cfg_.quorum()) break;
  }

  ByteWriter w;
  w.u8(kFinal);
  w.u64(round);
  active_->tx.serialize(w);
  cert.serialize(w);
  links_->broadcast(net::mux(net::kMuxBcch, w.data()), /*include_self=*/true);

  // Instance locally complete: the channel may open the next one; our own
  // delivery happens through the self-addressed FINAL like everyone else's.
  active_.reset();
  start_next_instance();
}

void Channel::handle_final(PartyId, ByteReader& r) {
  std::uint64_t round = r.u64();
  Transaction tx = Transaction::parse(r);
  EchoCertificate cert = EchoCertificate::parse(r);
  r.expect_done();
  if (cert.round != round) {
    ++stats_.bad_certs;
    return;
  }
  admit_final(cert.sender, round, tx, cert);
}

bool Channel::accept_external_final(std::uint32_t sender, std::uint64_t round,
                                    const Transaction& tx,
                                    const EchoCertificate& cert) {
  if (cert.sender != sender || cert.round != round) return false;
  return admit_final(sender, round, tx, cert);
}

bool Channel::admit_final(std::uint32_t sender, std::uint64_t round,
                          const Transaction& tx, const EchoCertificate& cert) {
  if (sender >= cfg_.n || cert.sender != sender || cert.round != round ||
      cert.msg_digest != digest(tx.canonical_bytes()) ||
      !cert.valid(cfg_, keys_, *verify_cache_)) {
    ++stats_.bad_certs;
    return false;
  }

  ReceiverState& rs = receivers_[sender];
  if (round < rs.next_deliver) {
    ++stats_.stale_finals;
    return true;  // authentic, but the instance already delivered
  }
  if (round > rs.next_deliver) {
    if (round >= rs.next_deliver + kFinalWindow) {
      ++stats_.window_drops;
      return true;
    }
    rs.buffered.emplace(round, std::make_pair(tx, cert));  // first copy wins
    return true;
  }

  rs.log.emplace_back(tx, cert);
  rs.next_deliver++;
  rs.echoed.erase(rs.echoed.begin(), rs.echoed.upper_bound(round));
  ++stats_.delivered;
  if (deliver_) {
    BcchMessage m;
    m.tx = tx;
    m.round = round;
    m.from_process = PartyId{sender};
    m.id = message_id(sender, round, tx.id);
    deliver_(m, cert);
  }
  drain(sender);
  return true;
}

void Channel::drain(std::uint32_t sender) {
  ReceiverState& rs = receivers_[sender];
  auto it = rs.buffered.find(rs.next_deliver);
  while (it != rs.buffered.end()) {
    auto [tx, cert] = it->second;
    rs.buffered.erase(it);
    rs.log.emplace_back(tx, cert);
    std::uint64_t round = rs.next_deliver++;
    rs.echoed.erase(rs.echoed.begin(), rs.echoed.upper_bound(round));
    ++stats_.delivered;
    if (deliver_) {
      BcchMessage m;
      m.tx = tx;
      m.round = round;
      m.from_process = PartyId{sender};
      m.id = message_id(sender, round, tx.id);
      deliver_(m, cert);
    }
    it = rs.buffered.find(rs.next_deliver);
  }
}

const std::pair<Transaction, EchoCertificate>* Channel::stored(
    std::uint32_t sender, std::uint64_t round) const {
  const ReceiverState& rs = receivers_.at(sender);
  if (round >= rs.log.size()) return nullptr;
  return &rs.log[round];
}

}  // namespace qof::bcch
