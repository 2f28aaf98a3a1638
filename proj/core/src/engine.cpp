#include "qof/engine.hpp"

#include <algorithm>

#include "qof/wire.hpp"

namespace qof::engine {

namespace {

constexpr std::uint8_t kStatus = 1;
constexpr std::uint8_t kMissingReq = 2;
constexpr std::uint8_t kMissingResp = 3;

constexpr std::uint64_t kMaxMissingSpan = 4096;

}  // namespace

std::vector<std::uint64_t> compute_cut(const vbc::ClockMatrix& decided,
                                       std::uint32_t n, std::uint32_t f) {
  std::vector<std::uint64_t> cut(n, 0);
  for (std::uint32_t j = 0; j < n; ++j) {
    std::vector<std::uint64_t> column;
    column.reserve(decided.rows.size());
    for (const auto& [party, row] : decided.rows) column.push_back(row.vc[j]);
    std::sort(column.begin(), column.end(), std::greater<>());
    // Largest v with more than f entries >= v is the (f+1)-th largest entry.
    cut[j] = column.size() > f ? column[f] : 0;
  }
  return cut;
}

RoundEngine::RoundEngine(const Config& cfg, PartyId self, const KeyView& keys,
                         Scheduler& sched, net::AuthLinks& links,
                         bcch::Channel& channel, vbc::Endpoint& consensus,
                         VerifyCache& verify_cache, sim::Tracer* tracer,
                         RoundTrigger trigger, std::uint64_t relay_delay_us,
                         std::uint64_t fetch_retry_us)
    : cfg_(cfg),
      self_(self),
      keys_(keys),
      sched_(&sched),
      links_(&links),
      channel_(&channel),
      consensus_(&consensus),
      verify_cache_(&verify_cache),
      tracer_(tracer),
      trigger_(std::move(trigger)),
      relay_delay_us_(relay_delay_us),
      fetch_retry_us_(fetch_retry_us),
      vc_(cfg.n),
      msgs_(cfg.n),
      prev_cut_(cfg.n, 0) {}

void RoundEngine::start() {
  if (trigger_.mode != RoundTrigger::Mode::Scheduled) return;
  for (std::size_t i = 0; i < trigger_.scheduled_at_us.size(); ++i) {
    std::uint64_t round = i + 1;
    sched_->post(trigger_.scheduled_at_us[i],
                 static_cast<std::int32_t>(self_.index), [this, round] {
                   sched_due_ = std::max(sched_due_, round);
                   maybe_start_round();
                 });
  }
}

bool RoundEngine::of_broadcast(const Transaction& tx) {
  if (relayed_ids_.count(tx.id)) return true;  // duplicate submission
  relayed_ids_.insert(tx.id);
  relay_pending_.erase(tx.id);
  if (tracer_) tracer_->of_broadcast(sched_->now_us(), self_.index, tx);
  if (!channel_->broadcast(tx)) {
    ++stats_.backpressure;
    return false;
  }
  return true;
}

void RoundEngine::on_bcch_deliver(const bcch::BcchMessage& m,
                                  const bcch::EchoCertificate&) {
  const std::uint32_t sender = m.from_process.index;
  require(m.round == msgs_[sender].size(),
          "bcch delivery out of FIFO order");
  msgs_[sender].push_back(m.tx.id);
  tx_store_.emplace(m.tx.id, m.tx);
  vc_[sender] += 1;
  require(vc_[sender] == msgs_[sender].size(), "vc diverged from msgs length");
  if (tracer_)
    tracer_->bcch_deliver(sched_->now_us(), self_.index, sender, m.round,
                          m.tx.id);

  // Fallback relay: a transaction first seen on another party's channel
  // eventually enters our own channel too, unless a client copy arrives
  // first. Keeps every transaction spreading to all correct channels.
  if (!relayed_ids_.count(m.tx.id) && !relay_pending_.count(m.tx.id)) {
    relay_pending_.insert(m.tx.id);
    Digest id = m.tx.id;
    sched_->post_in(relay_delay_us_, static_cast<std::int32_t>(self_.index),
                    [this, id] {
                      if (!relay_pending_.erase(id)) return;
                      if (relayed_ids_.count(id)) return;
                      ++stats_.fallback_relays;
                      of_broadcast(tx_store_.at(id));
                    });
  }

  if (!decided_.empty()) pump();
  maybe_start_round();
}

std::uint64_t RoundEngine::pending_new() const {
  std::uint64_t pending = 0;
  for (std::uint32_t j = 0; j < cfg_.n; ++j)
    if (vc_[j] > prev_cut_[j]) pending += vc_[j] - prev_cut_[j];
  return pending;
}

void RoundEngine::maybe_start_round() {
  if (started_ > processed_) return;  // a round is in flight
  const std::uint64_t r = started_ + 1;

  bool due = false;
  if (trigger_.mode == RoundTrigger::Mode::Count) {
    due = pending_new() >= cfg_.round_trigger;
  } else {
    due = sched_due_ >= r;
  }
  // Join: someone else already opened this round; our status row is needed
  // for everyone to advance together.
  if (!due) {
    auto it = collect_.find(r);
    due = it != collect_.end() && !it->second.rows.empty();
  }
  if (due) start_round(r);
}

void RoundEngine::start_round(std::uint64_t r) {
  require(started_ == r - 1 && processed_ == r - 1,
          "round started out of order");
  started_ = r;

  Bytes msg = vbc::status_sign_bytes(r, vc_);
  vbc::ClockRow row;
  row.vc = vc_;
  row.sig = keys_.sign(SignDomain::Status, msg);

  auto& col = collect_[r];
  if (col.rows.emplace(self_.index, row).second)
    col.arrival_order.push_back(self_.index);
  if (tracer_) tracer_->status(sched_->now_us(), self_.index, r, vc_);

  ByteWriter w;
  w.u8(kStatus);
  w.u64(r);
  row.vc.serialize(w);
  w.raw(row.sig);
  links_->broadcast(net::mux(net::kMuxEngine, w.data()),
                    /*include_self=*/false);
  check_propose(r);
}

void RoundEngine::on_message(PartyId from, ByteReader& r) {
  switch (r.u8()) {
    case kStatus:
      handle_status(from, r);
      break;
    case kMissingReq:
      handle_missing_req(from, r);
      break;
    case kMissingResp:
      handle_missing_resp(from, r);
      break;
    default:
      throw ParseError("unknown engine message kind");
  }
}

void RoundEngine::handle_status(PartyId from, ByteReader& r) {
  std::uint64_t round = r.u64();
  VectorClock vc = VectorClock::parse(r, cfg_.n);
  Signature sig{};
  auto s = r.raw(kSignatureSize);
  std::copy(s.begin(), s.end(), sig.begin());
  r.expect_done();

  if (round <= processed_) {
    ++stats_.stale_statuses;
    return;
  }
  Bytes msg = vbc::status_sign_bytes(round, vc);
  if (!verify_cache_->verify(keys_.public_key(from.index), SignDomain::Status,
                             msg, sig)) {
    ++stats_.bad_status_sigs;
    return;
  }

  auto& col = collect_[round];
  vbc::ClockRow row;
  row.vc = std::move(vc);
  row.sig = sig;
  if (!col.rows.emplace(from.index, std::move(row)).second) {
    ++stats_.duplicate_statuses;  // keep the first row per sender
    return;
  }
  col.arrival_order.push_back(from.index);

  if (round == started_) {
    check_propose(round);
  } else {
    maybe_start_round();  // join the round others already opened
  }
}

void RoundEngine::check_propose(std::uint64_t r) {
  auto it = collect_.find(r);
  if (it == collect_.end()) return;
  RoundCollect& col = it->second;
  if (col.proposed || r != started_) return;
  if (col.rows.size() < cfg_.status_threshold()) return;

  const auto& st = consensus_->state();
  require(st.rd == r - 1 && !st.in_round, "propose gate out of sync");

  vbc::ClockMatrix m;
  m.round = r;
  std::size_t taken = 0;
  for (std::uint32_t party : col.arrival_order) {
    if (taken == cfg_.status_threshold()) break;
    m.rows.emplace(party, col.rows.at(party));
    ++taken;
  }
  col.proposed = true;
  if (tracer_) tracer_->propose(sched_->now_us(), self_.index, r, m.rows.size());
  consensus_->propose(m);
}

void RoundEngine::on_decide(std::uint64_t round, const vbc::ClockMatrix& m) {
  if (tracer_) tracer_->decide(sched_->now_us(), self_.index, round,
                               m.rows.size());
  PendingRound pr;
  pr.round = round;
  pr.matrix = m;
  decided_.push_back(std::move(pr));
  pump();
}

bool RoundEngine::cut_satisfied(const std::vector<std::uint64_t>& cut) const {
  for (std::uint32_t j = 0; j < cfg_.n; ++j)
    if (vc_[j] < cut[j]) return false;
  return true;
}

void RoundEngine::pump() {
  while (!decided_.empty()) {
    PendingRound& pr = decided_.front();
    if (!pr.have_cut) {
      pr.cut = compute_cut(pr.matrix, cfg_.n, cfg_.f);
      pr.have_cut = true;
      for (std::uint32_t j = 0; j < cfg_.n; ++j)
        require(pr.cut[j] >= prev_cut_[j], "cut not monotone across rounds");
      if (tracer_) tracer_->cut(sched_->now_us(), self_.index, pr.round, pr.cut);
    }
    if (!cut_satisfied(pr.cut)) {
      if (!pr.fetching) {
        pr.fetching = true;
        send_missing_requests(pr);
        arm_fetch_retry(pr.round);
      }
      return;  // resume from on_bcch_deliver once the gaps close
    }
    process_round(pr);
    prev_cut_ = pr.cut;
    processed_ = pr.round;
    collect_.erase(collect_.begin(), collect_.upper_bound(pr.round));
    decided_.pop_front();
  }
  maybe_start_round();
}

void RoundEngine::process_round(PendingRound& pr) {
  const std::uint64_t now = sched_->now_us();
  auto vertices = fair::build_vertices(msgs_, pr.cut, delivered_ids_);
  if (tracer_) tracer_->vertices(now, self_.index, pr.round, vertices);

  auto matrix = fair::build_precedence(msgs_, pr.cut, cfg_);
  auto graph = fair::add_edges(matrix, vertices);
  auto condensed = fair::collapse(graph);

  if (tracer_) {
    std::vector<std::vector<Digest>> components;
    for (const auto& [key, v] : condensed.vertices)
      components.push_back(v.members);
    tracer_->collapsed(now, self_.index, pr.round, components);
  }

  auto occurrence = fair::occurrences(msgs_, pr.cut);
  auto batches = fair::extract_deliverable(condensed, occurrence, cfg_);

  std::uint32_t seq = 0;
  for (auto& set : batches) {
    DeliveredBatch batch;
    batch.round = pr.round;
    batch.seq = seq++;
    for (const auto& id : set) {
      require(delivered_ids_.insert(id).second,
              "transaction delivered twice");
      batch.txs.push_back(tx_store_.at(id));
    }
    if (tracer_) tracer_->batch(now, self_.index, pr.round, batch.seq, set);
    delivered_log_.push_back(std::move(batch));
  }
}

void RoundEngine::send_missing_requests(const PendingRound& pr) {
  for (std::uint32_t j = 0; j < cfg_.n; ++j) {
    if (vc_[j] >= pr.cut[j]) continue;
    ByteWriter w;
    w.u8(kMissingReq);
    w.u32(j);
    w.u64(vc_[j]);
    w.u64(pr.cut[j]);
    ++stats_.missing_requests;
    links_->broadcast(net::mux(net::kMuxEngine, w.data()),
                      /*include_self=*/false);
  }
}

void RoundEngine::arm_fetch_retry(std::uint64_t round) {
  sched_->post_in(fetch_retry_us_, static_cast<std::int32_t>(self_.index),
                  [this, round] {
                    if (decided_.empty()) return;
                    PendingRound& pr = decided_.front();
                    if (pr.round != round || !pr.fetching) return;
                    if (cut_satisfied(pr.cut)) return;
                    send_missing_requests(pr);
                    arm_fetch_retry(round);
                  });
}

void RoundEngine::handle_missing_req(PartyId from, ByteReader& r) {
  std::uint32_t channel = r.u32();
  std::uint64_t lo = r.u64();
  std::uint64_t hi = r.u64();
  r.expect_done();
  if (channel >= cfg_.n || hi < lo || hi - lo > kMaxMissingSpan) return;

  hi = std::min<std::uint64_t>(hi, channel_->delivered_count(channel));
  for (std::uint64_t idx = lo; idx < hi; ++idx) {
    const auto* entry = channel_->stored(channel, idx);
    if (!entry) break;
    ByteWriter w;
    w.u8(kMissingResp);
    w.u32(channel);
    w.u64(idx);
    entry->first.serialize(w);
    entry->second.serialize(w);
    ++stats_.missing_responses;
    links_->send(from, net::mux(net::kMuxEngine, w.data()));
  }
}

void RoundEngine::handle_missing_resp(PartyId, ByteReader& r) {
  std::uint32_t channel = r.u32();
  std::uint64_t idx = r.u64();
  Transaction tx = Transaction::parse(r);
  bcch::EchoCertificate cert = bcch::EchoCertificate::parse(r);
  r.expect_done();
  if (channel >= cfg_.n) return;
  // Replies are applied through the normal bcch delivery path; an invalid
  // certificate is rejected there.
  if (!channel_->accept_external_final(channel, idx, tx, cert))
    ++stats_.bad_missing_replies;
}

}  // namespace qof::engine
