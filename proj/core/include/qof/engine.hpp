#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "qof/bcch.hpp"
#include "qof/fairgraph.hpp"
#include "qof/scheduler.hpp"
#include "qof/trace.hpp"
#include "qof/transport.hpp"
#include "qof/types.hpp"
#include "qof/vbc.hpp"

namespace qof::engine {

/// Per-party prefix lengths of the per-sender logs considered in a round:
/// cut[j] is the largest value v such that more than f rows of the decided
/// clock matrix have column j at least v (0 if no such value).
std::vector<std::uint64_t> compute_cut(const vbc::ClockMatrix& decided,
                                       std::uint32_t n, std::uint32_t f);

struct DeliveredBatch {
  std::uint64_t round = 0;
  std::uint32_t seq = 0;
  std::vector<Transaction> txs;  // sorted by id
};

struct EngineStats {
  std::uint64_t bad_status_sigs = 0;
  std::uint64_t stale_statuses = 0;
  std::uint64_t duplicate_statuses = 0;
  std::uint64_t missing_requests = 0;
  std::uint64_t missing_responses = 0;
  std::uint64_t bad_missing_replies = 0;
  std::uint64_t fallback_relays = 0;
  std::uint64_t backpressure = 0;
};

/// When a party opens a new round.
struct RoundTrigger {
  enum class Mode {
    Count,      // >= round_trigger bcch deliveries beyond the last cut
    Scheduled,  // at fixed virtual times (scripted scenarios)
  };
  Mode mode = Mode::Count;
  std::vector<std::uint64_t> scheduled_at_us;
};

/// The per-party round engine: ingests bcch deliveries, exchanges signed
/// status messages, drives validated consensus, computes the cut, resolves
/// missing transactions, runs the dependency-graph order extraction and
/// emits of-deliver batches.
class RoundEngine {
 public:
  RoundEngine(const Config& cfg, PartyId self, const KeyView& keys,
              Scheduler& sched, net::AuthLinks& links, bcch::Channel& channel,
              vbc::Endpoint& consensus, VerifyCache& verify_cache,
              sim::Tracer* tracer, RoundTrigger trigger,
              std::uint64_t relay_delay_us, std::uint64_t fetch_retry_us);

  /// Arms scheduled-round timers; call once after wiring.
  void start();

  /// Hands tx to this party's broadcast channel. Duplicate ids are no-ops.
  /// Returns false on channel backpressure.
  bool of_broadcast(const Transaction& tx);

  /// Client-facing submission entry point.
  void on_client_submit(const Transaction& tx) { of_broadcast(tx); }

  void on_bcch_deliver(const bcch::BcchMessage& m,
                       const bcch::EchoCertificate& cert);
  void on_message(PartyId from, ByteReader& r);
  void on_decide(std::uint64_t round, const vbc::ClockMatrix& matrix);

  const VectorClock& vc() const { return vc_; }
  const std::vector<DeliveredBatch>& delivered_log() const {
    return delivered_log_;
  }
  const std::set<Digest>& delivered_ids() const { return delivered_ids_; }
  const EngineStats& stats() const { return stats_; }
  std::uint64_t processed_rounds() const { return processed_; }

 private:
  struct RoundCollect {
    std::map<std::uint32_t, vbc::ClockRow> rows;
    std::vector<std::uint32_t> arrival_order;
    bool proposed = false;
  };

  struct PendingRound {
    std::uint64_t round = 0;
    vbc::ClockMatrix matrix;
    bool have_cut = false;
    std::vector<std::uint64_t> cut;
    bool fetching = false;
  };

  void maybe_start_round();
  void start_round(std::uint64_t r);
  void check_propose(std::uint64_t r);
  void pump();
  void process_round(PendingRound& pr);
  bool cut_satisfied(const std::vector<std::uint64_t>& cut) const;
  void send_missing_requests(const PendingRound& pr);
  void arm_fetch_retry(std::uint64_t round);
  std::uint64_t pending_new() const;

  void handle_status(PartyId from, ByteReader& r);
  void handle_missing_req(PartyId from, ByteReader& r);
  void handle_missing_resp(PartyId from, ByteReader& r);

  Config cfg_;
  PartyId self_;
  KeyView keys_;
  Scheduler* sched_;
  net::AuthLinks* links_;
  bcch::Channel* channel_;
  vbc::Endpoint* consensus_;
  VerifyCache* verify_cache_;
  sim::Tracer* tracer_;
  RoundTrigger trigger_;
  std::uint64_t relay_delay_us_;
  std::uint64_t fetch_retry_us_;

  // Party state (spec: vc, msgs, round counters, delivered set and log).
  VectorClock vc_;
  fair::TxLogs msgs_;                       // tx ids per sender channel
  std::map<Digest, Transaction> tx_store_;  // id -> transaction
  std::set<Digest> delivered_ids_;
  std::vector<DeliveredBatch> delivered_log_;

  std::set<Digest> relayed_ids_;   // ids we have of-broadcast
  std::set<Digest> relay_pending_; // fallback relay armed

  std::uint64_t started_ = 0;    // highest round we sent a status for
  std::uint64_t processed_ = 0;  // highest round fully processed
  std::uint64_t sched_due_ = 0;  // highest scheduled round due
  std::map<std::uint64_t, RoundCollect> collect_;
  std::deque<PendingRound> decided_;
  std::vector<std::uint64_t> prev_cut_;

  EngineStats stats_;
};

}  // namespace qof::engine
