#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "qof/crypto.hpp"
#include "qof/scheduler.hpp"
#include "qof/transport.hpp"
#include "qof/types.hpp"
#include "qof/vbc.hpp"

namespace qof::vbc {

struct SequencerStats {
  std::uint64_t blocks_proposed = 0;
  std::uint64_t blocks_delivered = 0;
  std::uint64_t values_delivered = 0;
  std::uint64_t view_changes = 0;
  std::uint64_t admission_drops = 0;
  std::uint64_t fetches = 0;
};

/// Leader-based total-order broadcast with round-robin rotation on timeout.
///
/// The leader of the current view assigns global sequence numbers to blocks
/// of submitted values. A block at position s is delivered once a quorum of
/// parties echoed it and a quorum then acknowledged that echo quorum
/// (two-phase: ECHO then READY, both broadcast to all). On timeout parties
/// move to the next view; the new leader collects n-f state reports and
/// re-proposes every position that any report had prepared, so a block that
/// may have been delivered anywhere keeps both its position and its
/// content. Positions nobody prepared are refilled (empty blocks if there
/// is nothing to carry), which keeps the sequence gap-free.
///
/// Rotation handles crash faults, including a leader crashing mid-broadcast.
/// Byzantine leaders are outside this component's fault model: the harness
/// adversaries mutate broadcast-channel and status traffic, not sequencer
/// traffic.
class SequencerAbc final : public Abc {
 public:
  SequencerAbc(const Config& cfg, PartyId self, const KeyView& keys,
               net::AuthLinks& links, Scheduler& sched,
               VerifyCache& verify_cache, std::uint64_t timeout_base_us);

  void broadcast(Bytes value) override;
  void on_message(PartyId from, ByteReader& r);

  std::uint32_t leader_of(std::uint64_t view) const { return view % cfg_.n; }
  std::uint64_t view() const { return view_; }
  const SequencerStats& stats() const { return stats_; }

 private:
  struct Slot {
    // Current proposal (highest view seen for this position).
    std::uint64_t prop_view = 0;
    Digest prop_digest{};
    bool has_prop = false;

    std::map<Digest, std::vector<Bytes>> contents;  // digest -> values
    std::map<std::pair<std::uint64_t, Digest>,
             std::map<std::uint32_t, Signature>>
        echoes, readies;
    std::set<std::uint64_t> echoed_views, readied_views;

    // Snapshot of the highest-view echo quorum we assembled; reported in
    // view changes so a possibly-delivered block is always re-adopted.
    bool has_prep = false;
    std::uint64_t prep_view = 0;
    Digest prep_digest{};
    std::map<std::uint32_t, Signature> prep_sigs;

    bool committed = false;
    Digest committed_digest{};
    bool delivered = false;
    bool fetching = false;
  };

  struct PreparedReport {
    std::uint64_t seq = 0;
    std::uint64_t view = 0;
    std::vector<Bytes> values;
    std::vector<std::pair<std::uint32_t, Signature>> sigs;
  };

  struct ViewChangeReport {
    std::uint64_t next_deliver = 0;
    std::vector<PreparedReport> prepared;
  };

  bool is_leader() const { return leader_of(view_) == self_.index; }

  void submit_local(Bytes value);
  void leader_enqueue(Bytes value);
  void leader_flush();
  void propose_block(std::uint64_t seq, std::uint64_t view,
                     std::vector<Bytes> values);
  void handle_relay(PartyId from, ByteReader& r);
  void handle_block(PartyId from, ByteReader& r);
  void handle_echo(PartyId from, ByteReader& r);
  void handle_ready(PartyId from, ByteReader& r);
  void handle_view_change(PartyId from, ByteReader& r);
  void handle_new_view(PartyId from, ByteReader& r);
  void handle_fetch(PartyId from, ByteReader& r);
  void handle_fetch_resp(PartyId from, ByteReader& r);

  void accept_proposal(std::uint64_t view, std::uint64_t seq,
                       std::vector<Bytes> values);
  void maybe_echo(std::uint64_t seq);
  void maybe_progress(std::uint64_t seq);
  void try_deliver();
  void join_view(std::uint64_t v);
  void send_view_change(std::uint64_t v);
  void maybe_assemble_new_view();
  void arm_timer();
  void on_timer(std::uint64_t generation);
  bool work_outstanding() const;
  std::uint64_t timeout_us() const;

  static Digest content_digest(std::uint64_t seq,
                               const std::vector<Bytes>& values);
  static Bytes phase_sign_bytes(std::uint8_t role, std::uint64_t view,
                                std::uint64_t seq, const Digest& d);

  Config cfg_;
  PartyId self_;
  KeyView keys_;
  net::AuthLinks* links_;
  Scheduler* sched_;
  VerifyCache* verify_cache_;
  std::uint64_t timeout_base_us_;

  std::uint64_t view_ = 0;
  std::uint64_t next_deliver_ = 0;
  std::map<std::uint64_t, Slot> slots_;

  // Submitter side: values of ours not yet seen in a delivered block.
  std::vector<Bytes> pending_;
  std::set<Digest> pending_digests_;
  std::set<Digest> delivered_digests_;

  // Leader side.
  std::deque<Bytes> queue_;
  std::set<Digest> queued_or_included_;
  std::uint64_t next_propose_ = 0;

  // View-change bookkeeping.
  std::map<std::uint64_t, std::map<std::uint32_t, ViewChangeReport>> reports_;
  std::set<std::uint64_t> view_change_sent_, new_view_sent_;

  std::uint64_t timer_generation_ = 0;
  std::uint64_t timer_progress_mark_ = 0;
  bool timer_armed_ = false;

  SequencerStats stats_;
};

}  // namespace qof::vbc
