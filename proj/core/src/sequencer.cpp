#include "qof/sequencer.hpp"

#include <algorithm>

#include "qof/wire.hpp"

namespace qof::vbc {

namespace {

constexpr std::uint8_t kRelay = 1;
constexpr std::uint8_t kBlock = 2;
constexpr std::uint8_t kEcho = 3;
constexpr std::uint8_t kReady = 4;
constexpr std::uint8_t kViewChange = 5;
constexpr std::uint8_t kNewView = 6;
constexpr std::uint8_t kFetch = 7;
constexpr std::uint8_t kFetchResp = 8;

constexpr std::uint8_t kRoleBlock = 0;
constexpr std::uint8_t kRoleEcho = 1;
constexpr std::uint8_t kRoleReady = 2;
constexpr std::uint8_t kRoleNewView = 3;

constexpr std::uint32_t kMaxValuesPerBlock = 4096;

void write_values(ByteWriter& w, const std::vector<Bytes>& values) {
  w.u32(static_cast<std::uint32_t>(values.size()));
  for (const auto& v : values) w.bytes(v);
}

std::vector<Bytes> read_values(ByteReader& r) {
  std::uint32_t count = r.u32();
  if (count > kMaxValuesPerBlock) throw ParseError("oversized block");
  std::vector<Bytes> values;
  values.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) values.push_back(r.bytes());
  return values;
}

Signature read_sig(ByteReader& r) {
  Signature sig{};
  auto s = r.raw(kSignatureSize);
  std::copy(s.begin(), s.end(), sig.begin());
  return sig;
}

Digest read_digest(ByteReader& r) {
  Digest d{};
  auto s = r.raw(kDigestSize);
  std::copy(s.begin(), s.end(), d.begin());
  return d;
}

}  // namespace

SequencerAbc::SequencerAbc(const Config& cfg, PartyId self,
                           const KeyView& keys, net::AuthLinks& links,
                           Scheduler& sched, VerifyCache& verify_cache,
                           std::uint64_t timeout_base_us)
    : cfg_(cfg),
      self_(self),
      keys_(keys),
      links_(&links),
      sched_(&sched),
      verify_cache_(&verify_cache),
      timeout_base_us_(std::max<std::uint64_t>(timeout_base_us, 1000)) {}

Digest SequencerAbc::content_digest(std::uint64_t seq,
                                    const std::vector<Bytes>& values) {
  ByteWriter w;
  w.u64(seq);
  write_values(w, values);
  return digest(w.data());
}

Bytes SequencerAbc::phase_sign_bytes(std::uint8_t role, std::uint64_t view,
                                     std::uint64_t seq, const Digest& d) {
  ByteWriter w;
  w.u8(role);
  w.u64(view);
  w.u64(seq);
  w.raw(d);
  return w.take();
}

void SequencerAbc::broadcast(Bytes value) { submit_local(std::move(value)); }

void SequencerAbc::submit_local(Bytes value) {
  Digest d = digest(value);
  if (delivered_digests_.count(d) || pending_digests_.count(d)) return;
  if (admissible && !admissible(value)) {
    ++stats_.admission_drops;
    return;
  }
  pending_digests_.insert(d);
  pending_.push_back(value);
  if (is_leader()) {
    leader_enqueue(std::move(value));
  } else {
    ByteWriter w;
    w.u8(kRelay);
    w.bytes(value);
    links_->send(PartyId{leader_of(view_)}, net::mux(net::kMuxAbc, w.data()));
  }
  arm_timer();
}

void SequencerAbc::leader_enqueue(Bytes value) {
  Digest d = digest(value);
  if (delivered_digests_.count(d) || queued_or_included_.count(d)) return;
  if (admissible && !admissible(value)) {
    ++stats_.admission_drops;
    return;
  }
  queued_or_included_.insert(d);
  queue_.push_back(std::move(value));
  leader_flush();
}

void SequencerAbc::leader_flush() {
  while (!queue_.empty()) {
    std::vector<Bytes> values;
    while (!queue_.empty() && values.size() < cfg_.batch_cap) {
      values.push_back(std::move(queue_.front()));
      queue_.pop_front();
    }
    propose_block(next_propose_++, view_, std::move(values));
  }
}

void SequencerAbc::propose_block(std::uint64_t seq, std::uint64_t view,
                                 std::vector<Bytes> values) {
  Digest d = content_digest(seq, values);
  Signature sig = keys_.sign(SignDomain::Block,
                             phase_sign_bytes(kRoleBlock, view, seq, d));
  ByteWriter w;
  w.u8(kBlock);
  w.u64(view);
  w.u64(seq);
  write_values(w, values);
  w.raw(sig);
  ++stats_.blocks_proposed;
  links_->broadcast(net::mux(net::kMuxAbc, w.data()), /*include_self=*/true);
}

void SequencerAbc::on_message(PartyId from, ByteReader& r) {
  switch (r.u8()) {
    case kRelay:
      handle_relay(from, r);
      break;
    case kBlock:
      handle_block(from, r);
      break;
    case kEcho:
      handle_echo(from, r);
      break;
    case kReady:
      handle_ready(from, r);
      break;
    case kViewChange:
      handle_view_change(from, r);
      break;
    case kNewView:
      handle_new_view(from, r);
      break;
    case kFetch:
      handle_fetch(from, r);
      break;
    case kFetchResp:
      handle_fetch_resp(from, r);
      break;
    default:
      throw ParseError("unknown sequencer message kind");
  }
}

void SequencerAbc::handle_relay(PartyId, ByteReader& r) {
  Bytes value = r.bytes();
  r.expect_done();
  if (!is_leader()) return;  // sender will retry with the current leader
  leader_enqueue(std::move(value));
}

void SequencerAbc::handle_block(PartyId from, ByteReader& r) {
  std::uint64_t view = r.u64();
  std::uint64_t seq = r.u64();
  std::vector<Bytes> values = read_values(r);
  Signature sig = read_sig(r);
  r.expect_done();

  if (from.index != leader_of(view)) return;
  Digest d = content_digest(seq, values);
  if (!verify_cache_->verify(keys_.public_key(from.index), SignDomain::Block,
                             phase_sign_bytes(kRoleBlock, view, seq, d), sig))
    return;
  if (view > view_) join_view(view);
  accept_proposal(view, seq, std::move(values));
}

void SequencerAbc::accept_proposal(std::uint64_t view, std::uint64_t seq,
                                   std::vector<Bytes> values) {
  Slot& slot = slots_[seq];
  Digest d = content_digest(seq, values);
  slot.contents.emplace(d, std::move(values));
  if (!slot.has_prop || view >= slot.prop_view) {
    slot.has_prop = true;
    slot.prop_view = view;
    slot.prop_digest = d;
  }
  maybe_echo(seq);
  maybe_progress(seq);
  arm_timer();
}

void SequencerAbc::maybe_echo(std::uint64_t seq) {
  Slot& slot = slots_[seq];
  if (!slot.has_prop || slot.prop_view != view_) return;
  if (slot.echoed_views.count(view_)) return;
  slot.echoed_views.insert(view_);
  Signature sig =
      keys_.sign(SignDomain::Block,
                 phase_sign_bytes(kRoleEcho, view_, seq, slot.prop_digest));
  ByteWriter w;
  w.u8(kEcho);
  w.u64(view_);
  w.u64(seq);
  w.raw(slot.prop_digest);
  w.raw(sig);
  links_->broadcast(net::mux(net::kMuxAbc, w.data()), /*include_self=*/true);
}

void SequencerAbc::handle_echo(PartyId from, ByteReader& r) {
  std::uint64_t view = r.u64();
  std::uint64_t seq = r.u64();
  Digest d = read_digest(r);
  Signature sig = read_sig(r);
  r.expect_done();
  if (!verify_cache_->verify(keys_.public_key(from.index), SignDomain::Block,
                             phase_sign_bytes(kRoleEcho, view, seq, d), sig))
    return;
  slots_[seq].echoes[{view, d}].emplace(from.index, sig);
  maybe_progress(seq);
}

void SequencerAbc::handle_ready(PartyId from, ByteReader& r) {
  std::uint64_t view = r.u64();
  std::uint64_t seq = r.u64();
  Digest d = read_digest(r);
  Signature sig = read_sig(r);
  r.expect_done();
  if (!verify_cache_->verify(keys_.public_key(from.index), SignDomain::Block,
                             phase_sign_bytes(kRoleReady, view, seq, d), sig))
    return;
  slots_[seq].readies[{view, d}].emplace(from.index, sig);
  maybe_progress(seq);
}

void SequencerAbc::maybe_progress(std::uint64_t seq) {
  Slot& slot = slots_[seq];
  const std::uint32_t q = cfg_.quorum();

  for (const auto& [key, sigs] : slot.echoes) {
    const auto& [view, d] = key;
    if (sigs.size() < q || !slot.contents.count(d)) continue;
    if (!slot.has_prep || view >= slot.prep_view) {
      slot.has_prep = true;
      slot.prep_view = view;
      slot.prep_digest = d;
      slot.prep_sigs = sigs;
    }
    if (view == view_ && !slot.readied_views.count(view)) {
      slot.readied_views.insert(view);
      Signature sig = keys_.sign(
          SignDomain::Block, phase_sign_bytes(kRoleReady, view, seq, d));
      ByteWriter w;
      w.u8(kReady);
      w.u64(view);
      w.u64(seq);
      w.raw(d);
      w.raw(sig);
      links_->broadcast(net::mux(net::kMuxAbc, w.data()),
                        /*include_self=*/true);
    }
  }

  if (!slot.committed) {
    for (const auto& [key, sigs] : slot.readies) {
      if (sigs.size() < q) continue;
      slot.committed = true;
      slot.committed_digest = key.second;
      break;
    }
  }
  if (slot.committed && !slot.contents.count(slot.committed_digest) &&
      !slot.fetching) {
    // Committed by quorum but the content never reached us; at least one
    // live party prepared it and can serve the block.
    slot.fetching = true;
    ++stats_.fetches;
    ByteWriter w;
    w.u8(kFetch);
    w.u64(seq);
    w.raw(slot.committed_digest);
    links_->broadcast(net::mux(net::kMuxAbc, w.data()), false);
  }
  try_deliver();
}

void SequencerAbc::try_deliver() {
  while (true) {
    auto it = slots_.find(next_deliver_);
    if (it == slots_.end() || !it->second.committed) return;
    Slot& slot = it->second;
    auto content = slot.contents.find(slot.committed_digest);
    if (content == slot.contents.end()) return;  // waiting for fetch

    for (const Bytes& value : content->second) {
      Digest d = digest(value);
      pending_digests_.erase(d);
      std::erase_if(pending_, [&](const Bytes& p) { return digest(p) == d; });
      queued_or_included_.erase(d);
      if (!delivered_digests_.insert(d).second) continue;  // no duplication
      if (admissible && !admissible(value)) {
        ++stats_.admission_drops;
        continue;
      }
      ++stats_.values_delivered;
      if (deliver) deliver(value);
    }
    slot.delivered = true;
    ++stats_.blocks_delivered;
    ++next_deliver_;
  }
}

void SequencerAbc::join_view(std::uint64_t v) {
  if (v <= view_) return;
  view_ = v;
  ++stats_.view_changes;
  queue_.clear();
  queued_or_included_.clear();
  // Undelivered submissions move to the new leader.
  if (is_leader()) {
    for (const auto& value : pending_) leader_enqueue(value);
  } else {
    for (const auto& value : pending_) {
      ByteWriter w;
      w.u8(kRelay);
      w.bytes(value);
      links_->send(PartyId{leader_of(view_)},
                   net::mux(net::kMuxAbc, w.data()));
    }
  }
  timer_armed_ = false;  // restart the timeout window in the new view
  ++timer_generation_;
  arm_timer();
}

void SequencerAbc::send_view_change(std::uint64_t v) {
  if (view_change_sent_.count(v)) return;
  view_change_sent_.insert(v);

  ByteWriter w;
  w.u8(kViewChange);
  w.u64(v);
  w.u64(next_deliver_);
  std::uint32_t nprep = 0;
  for (auto it = slots_.lower_bound(next_deliver_); it != slots_.end(); ++it)
    if (it->second.has_prep) ++nprep;
  w.u32(nprep);
  for (auto it = slots_.lower_bound(next_deliver_); it != slots_.end(); ++it) {
    const Slot& slot = it->second;
    if (!slot.has_prep) continue;
    w.u64(it->first);
    w.u64(slot.prep_view);
    write_values(w, slot.contents.at(slot.prep_digest));
    w.u32(static_cast<std::uint32_t>(slot.prep_sigs.size()));
    for (const auto& [party, sig] : slot.prep_sigs) {
      w.u32(party);
      w.raw(sig);
    }
  }
  links_->broadcast(net::mux(net::kMuxAbc, w.data()), /*include_self=*/true);
}

void SequencerAbc::handle_view_change(PartyId from, ByteReader& r) {
  std::uint64_t v = r.u64();
  ViewChangeReport report;
  report.next_deliver = r.u64();
  std::uint32_t nprep = r.u32();
  if (nprep > 4096) throw ParseError("oversized view change");
  for (std::uint32_t i = 0; i < nprep; ++i) {
    PreparedReport p;
    p.seq = r.u64();
    p.view = r.u64();
    p.values = read_values(r);
    std::uint32_t nsigs = r.u32();
    if (nsigs > cfg_.n) throw ParseError("oversized prepare certificate");
    for (std::uint32_t k = 0; k < nsigs; ++k) {
      std::uint32_t party = r.u32();
      p.sigs.emplace_back(party, read_sig(r));
    }
    report.prepared.push_back(std::move(p));
  }
  r.expect_done();

  // Keep only entries whose echo quorum actually verifies.
  Digest d;
  std::erase_if(report.prepared, [&](const PreparedReport& p) {
    if (p.sigs.size() < cfg_.quorum()) return true;
    Digest cd = content_digest(p.seq, p.values);
    std::set<std::uint32_t> distinct;
    for (const auto& [party, sig] : p.sigs) {
      if (party >= cfg_.n || !distinct.insert(party).second) return true;
      if (!verify_cache_->verify(
              keys_.public_key(party), SignDomain::Block,
              phase_sign_bytes(kRoleEcho, p.view, p.seq, cd), sig))
        return true;
    }
    return false;
  });
  (void)d;

  reports_[v][from.index] = std::move(report);
  if (v > view_) {
    join_view(v);
    send_view_change(v);  // help the new leader reach its report quorum
  }
  maybe_assemble_new_view();
}

void SequencerAbc::maybe_assemble_new_view() {
  std::uint64_t v = view_;
  if (leader_of(v) != self_.index || new_view_sent_.count(v)) return;
  auto it = reports_.find(v);
  if (it == reports_.end() || it->second.size() < cfg_.status_threshold())
    return;
  new_view_sent_.insert(v);

  const auto& reps = it->second;
  std::uint64_t low = next_deliver_;
  std::uint64_t high = next_deliver_ == 0 ? 0 : next_deliver_ - 1;
  bool any = false;
  std::map<std::uint64_t, const PreparedReport*> adopt;
  for (const auto& [party, rep] : reps) {
    low = std::min(low, rep.next_deliver);
    for (const auto& p : rep.prepared) {
      high = std::max(high, p.seq);
      any = true;
      auto cur = adopt.find(p.seq);
      if (cur == adopt.end() || p.view > cur->second->view) adopt[p.seq] = &p;
    }
  }
  if (auto last = slots_.rbegin(); last != slots_.rend()) {
    if (last->second.has_prop || last->second.committed) {
      high = std::max(high, last->first);
      any = true;
    }
  }

  ByteWriter blocks;
  std::uint32_t nblocks = 0;
  if (any || low < next_deliver_) {
    for (std::uint64_t s = low; s <= high; ++s) {
      std::vector<Bytes> values;  // refill: empty block
      if (auto a = adopt.find(s); a != adopt.end()) {
        values = a->second->values;
      } else if (auto sl = slots_.find(s);
                 sl != slots_.end() && sl->second.committed &&
                 sl->second.contents.count(sl->second.committed_digest)) {
        values = sl->second.contents.at(sl->second.committed_digest);
      }
      blocks.u64(s);
      write_values(blocks, values);
      ++nblocks;
    }
    next_propose_ = high + 1;
  } else {
    next_propose_ = std::max(next_propose_, next_deliver_);
  }

  Digest bd = digest(blocks.data());
  Signature sig = keys_.sign(SignDomain::Block,
                             phase_sign_bytes(kRoleNewView, v, nblocks, bd));
  ByteWriter w;
  w.u8(kNewView);
  w.u64(v);
  w.u32(nblocks);
  w.raw(blocks.data());
  w.raw(sig);
  links_->broadcast(net::mux(net::kMuxAbc, w.data()), /*include_self=*/true);

  leader_flush();
}

void SequencerAbc::handle_new_view(PartyId from, ByteReader& r) {
  std::uint64_t v = r.u64();
  std::uint32_t nblocks = r.u32();
  if (nblocks > 65536) throw ParseError("oversized new view");
  ByteWriter blocks;
  std::vector<std::pair<std::uint64_t, std::vector<Bytes>>> parsed;
  for (std::uint32_t i = 0; i < nblocks; ++i) {
    std::uint64_t seq = r.u64();
    std::vector<Bytes> values = read_values(r);
    blocks.u64(seq);
    write_values(blocks, values);
    parsed.emplace_back(seq, std::move(values));
  }
  Signature sig = read_sig(r);
  r.expect_done();

  if (from.index != leader_of(v)) return;
  Digest bd = digest(blocks.data());
  if (!verify_cache_->verify(keys_.public_key(from.index), SignDomain::Block,
                             phase_sign_bytes(kRoleNewView, v, nblocks, bd),
                             sig))
    return;
  if (v > view_) join_view(v);
  for (auto& [seq, values] : parsed) accept_proposal(v, seq, std::move(values));
}

void SequencerAbc::handle_fetch(PartyId from, ByteReader& r) {
  std::uint64_t seq = r.u64();
  Digest d = read_digest(r);
  r.expect_done();
  auto it = slots_.find(seq);
  if (it == slots_.end()) return;
  auto content = it->second.contents.find(d);
  if (content == it->second.contents.end()) return;
  ByteWriter w;
  w.u8(kFetchResp);
  w.u64(seq);
  write_values(w, content->second);
  links_->send(from, net::mux(net::kMuxAbc, w.data()));
}

void SequencerAbc::handle_fetch_resp(PartyId, ByteReader& r) {
  std::uint64_t seq = r.u64();
  std::vector<Bytes> values = read_values(r);
  r.expect_done();
  Digest d = content_digest(seq, values);
  slots_[seq].contents.emplace(d, std::move(values));
  maybe_progress(seq);
}

bool SequencerAbc::work_outstanding() const {
  if (!pending_.empty()) return true;
  return slots_.lower_bound(next_deliver_) != slots_.end();
}

std::uint64_t SequencerAbc::timeout_us() const {
  return timeout_base_us_ << std::min<std::uint64_t>(view_, 6);
}

void SequencerAbc::arm_timer() {
  if (!work_outstanding()) {
    if (timer_armed_) {
      timer_armed_ = false;
      ++timer_generation_;
    }
    return;
  }
  if (timer_armed_) return;
  timer_armed_ = true;
  timer_progress_mark_ = next_deliver_;
  std::uint64_t gen = ++timer_generation_;
  sched_->post_in(timeout_us(), static_cast<std::int32_t>(self_.index),
                  [this, gen] { on_timer(gen); });
}

void SequencerAbc::on_timer(std::uint64_t generation) {
  if (generation != timer_generation_) return;
  timer_armed_ = false;
  if (!work_outstanding()) return;
  if (next_deliver_ > timer_progress_mark_) {
    // Deliveries happened during the window; keep the view, restart timer.
    timer_progress_mark_ = next_deliver_;
    arm_timer();
    return;
  }
  std::uint64_t v = view_ + 1;
  join_view(v);
  send_view_change(v);
  maybe_assemble_new_view();
  arm_timer();
}

}  // namespace qof::vbc
