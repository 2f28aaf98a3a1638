#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "qof/rng.hpp"
#include "qof/scheduler.hpp"
#include "qof/transport.hpp"

namespace qof::net {

/// In-memory frame fabric over the discrete-event scheduler. Each frame is
/// delivered after a delay drawn uniformly from [d_min, d_max]; given the
/// same seed and the same send sequence, two runs produce identical delivery
/// traces. Self-addressed frames are delivered with zero link delay.
class SimNetwork final : public FrameNetwork {
 public:
  SimNetwork(SimScheduler& sched, std::uint32_t n, std::uint64_t d_min_us,
             std::uint64_t d_max_us, std::uint64_t seed)
      : sched_(&sched),
        sinks_(n),
        d_min_us_(d_min_us),
        d_max_us_(d_max_us),
        rng_(seed) {}

  void send_frame(PartyId from, PartyId to, Bytes frame) override {
    if (!sched_->alive(from.index)) return;  // crashed sender
    std::uint64_t delay =
        from == to ? 0 : rng_.range(d_min_us_, d_max_us_);
    auto* sink = &sinks_.at(to.index);
    sched_->post_in(delay, static_cast<std::int32_t>(to.index),
                    [sink, f = std::move(frame)]() mutable {
                      if (*sink) (*sink)(std::move(f));
                    });
  }

  void register_sink(PartyId to, std::function<void(Bytes)> sink) override {
    sinks_.at(to.index) = std::move(sink);
  }

 private:
  SimScheduler* sched_;
  std::vector<std::function<void(Bytes)>> sinks_;
  std::uint64_t d_min_us_;
  std::uint64_t d_max_us_;
  Rng rng_;
};

}  // namespace qof::net
