#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <vector>

namespace qof {

inline constexpr std::int32_t kNoParty = -1;

/// Timer/event facility protocol components run against. The simulator
/// implements it with a deterministic discrete-event queue over virtual
/// time; the TCP runner implements it with per-party wall-clock loops.
class Scheduler {
 public:
  virtual ~Scheduler() = default;

  virtual std::uint64_t now_us() const = 0;

  /// Runs fn at absolute time at_us, attributed to `party` (kNoParty for
  /// events not tied to one party's event loop).
  virtual void post(std::uint64_t at_us, std::int32_t party,
                    std::function<void()> fn) = 0;

  void post_in(std::uint64_t delay_us, std::int32_t party,
               std::function<void()> fn) {
    post(now_us() + delay_us, party, std::move(fn));
  }
};

/// Deterministic discrete-event scheduler over virtual time.
///
/// Events execute in (time, insertion) order, so a run is a pure function of
/// the scheduled work. Each party is a single logical event loop: an event
/// bound to party p does not start before p's previous handler finished
/// (handlers occupy the party for proc_cost_us of virtual time), which is
/// what makes per-message processing cost show up in latency at scale.
class SimScheduler final : public Scheduler {
 public:
  SimScheduler(std::uint32_t n_parties, std::uint64_t proc_cost_us)
      : busy_until_(n_parties, 0),
        alive_(n_parties, true),
        proc_cost_us_(proc_cost_us) {}

  std::uint64_t now_us() const override { return now_; }

  void post(std::uint64_t at_us, std::int32_t party,
            std::function<void()> fn) override {
    if (at_us < now_) at_us = now_;
    queue_.push(Event{at_us, seq_++, party, std::move(fn)});
  }

  void kill_party(std::uint32_t party) { alive_.at(party) = false; }
  bool alive(std::uint32_t party) const { return alive_.at(party); }

  /// Runs events until the queue drains or virtual time passes deadline_us.
  /// Returns true on quiescence (queue drained).
  bool run(std::uint64_t deadline_us) {
    while (!queue_.empty()) {
      Event ev = queue_.top();
      if (ev.at > deadline_us) return false;
      queue_.pop();
      if (ev.party >= 0) {
        auto p = static_cast<std::uint32_t>(ev.party);
        if (!alive_[p]) continue;  // crashed party: event dropped
        if (busy_until_[p] > ev.at) {
          // Handler still running; requeue at the moment the party frees up.
          queue_.push(Event{busy_until_[p], seq_++, ev.party, std::move(ev.fn)});
          continue;
        }
        now_ = ev.at;
        ev.fn();
        busy_until_[p] = now_ + proc_cost_us_;
      } else {
        now_ = ev.at;
        ev.fn();
      }
      ++executed_;
    }
    return true;
  }

  std::uint64_t executed_events() const { return executed_; }

 private:
  struct Event {
    std::uint64_t at;
    std::uint64_t seq;
    std::int32_t party;
    std::function<void()> fn;

    bool operator>(const Event& o) const {
      if (at != o.at) return at > o.at;
      return seq > o.seq;
    }
  };

  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  std::uint64_t now_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t executed_ = 0;
  std::vector<std::uint64_t> busy_until_;
  std::vector<bool> alive_;
  std::uint64_t proc_cost_us_;
};

}  // namespace qof
