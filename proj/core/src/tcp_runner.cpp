#include <algorithm>
#include <atomic>
#include <chrono>
#include <thread>

#include "qof/bcch.hpp"
#include "qof/harness.hpp"
#include "qof/realtime_scheduler.hpp"
#include "qof/rng.hpp"
#include "qof/sequencer.hpp"
#include "qof/tcp_network.hpp"
#include "qof/vbc.hpp"
#include "qof/wire.hpp"

namespace qof::sim {

namespace {

struct TcpParty {
  std::unique_ptr<RealtimeScheduler> sched;
  std::unique_ptr<net::TcpNetwork> network;
  std::unique_ptr<net::AuthLinks> links;
  std::unique_ptr<bcch::Channel> channel;
  std::unique_ptr<vbc::SequencerAbc> abc;
  std::unique_ptr<vbc::Endpoint> consensus;
  std::unique_ptr<engine::RoundEngine> engine;
  std::unique_ptr<VerifyCache> verify_cache;
  std::unique_ptr<Tracer> tracer;
  std::atomic<std::uint64_t> delivered{0};
};

}  // namespace

RunResult run_tcp(const Scenario& scenario,
                  const std::vector<net::Endpoint>& topology) {
  scenario.validate();
  if (!scenario.faults.empty())
    throw ConfigError("TCP mode supports fault-free scenarios only");
  const Config& cfg = scenario.config;
  if (topology.size() != cfg.n)
    throw ConfigError("topology size does not match party count");

  const auto wall_start = std::chrono::steady_clock::now();
  RunResult result;
  result.keys = KeyMaterial::generate(cfg.n, derive_seed(scenario.seed, "keys"));
  result.correct.assign(cfg.n, true);

  // Same load shape as the simulator; times become wall-clock offsets from
  // each party's loop epoch.
  Rng payload_rng(derive_seed(scenario.seed, "payload"));
  Rng time_rng(derive_seed(scenario.seed, "client"));
  std::vector<std::pair<Transaction, std::vector<std::uint64_t>>> plan;
  for (std::uint32_t k = 0; k < scenario.tx_count; ++k) {
    Bytes payload(scenario.payload_size);
    for (auto& b : payload)
      b = static_cast<std::uint8_t>(payload_rng.below(256));
    Transaction tx = Transaction::make(
        k % scenario.n_clients, k / scenario.n_clients, std::move(payload));
    std::uint64_t base = time_rng.below(scenario.inject_window_us + 1);
    std::vector<std::uint64_t> at(cfg.n);
    for (std::uint32_t p = 0; p < cfg.n; ++p)
      at[p] = base + time_rng.below(scenario.jitter_us + 1);
    result.injected_ids.insert(tx.id);
    result.first_arrival_us[tx.id] = *std::min_element(at.begin(), at.end());
    plan.emplace_back(std::move(tx), std::move(at));
  }

  std::vector<TcpParty> parties(cfg.n);
  for (std::uint32_t i = 0; i < cfg.n; ++i) {
    TcpParty& tp = parties[i];
    PartyId self{i};
    KeyView kv{&result.keys[i]};
    tp.sched = std::make_unique<RealtimeScheduler>();
    tp.network = std::make_unique<net::TcpNetwork>(self, topology);
    tp.verify_cache = std::make_unique<VerifyCache>();
    tp.tracer = std::make_unique<Tracer>(cfg.n);
    auto* sched = tp.sched.get();
    tp.network->set_executor([sched](std::function<void()> fn) {
      sched->post(0, kNoParty, std::move(fn));
    });
    tp.links =
        std::make_unique<net::AuthLinks>(self, result.keys[i], *tp.network);
    tp.channel = std::make_unique<bcch::Channel>(cfg, self, kv, *tp.links,
                                                 *tp.verify_cache);
    tp.abc = std::make_unique<vbc::SequencerAbc>(
        cfg, self, kv, *tp.links, *tp.sched, *tp.verify_cache,
        scenario.abc_timeout_base_us());
    auto* tpp = &tp;
    tp.consensus = std::make_unique<vbc::Endpoint>(
        cfg, self, kv, *tp.abc, *tp.verify_cache,
        [tpp](std::uint64_t round, const vbc::ClockMatrix& m) {
          tpp->engine->on_decide(round, m);
        });
    tp.engine = std::make_unique<engine::RoundEngine>(
        cfg, self, kv, *tp.sched, *tp.links, *tp.channel, *tp.consensus,
        *tp.verify_cache, tp.tracer.get(), scenario.trigger,
        scenario.relay_delay_us, scenario.fetch_retry_us);
    tp.channel->set_deliver(
        [tpp](const bcch::BcchMessage& m, const bcch::EchoCertificate& c) {
          tpp->engine->on_bcch_deliver(m, c);
          tpp->delivered.store(tpp->engine->delivered_ids().size(),
                               std::memory_order_relaxed);
        });
    tp.links->set_deliver([tpp](PartyId from, const Bytes& body) {
      try {
        ByteReader r(body);
        switch (r.u8()) {
          case net::kMuxBcch:
            tpp->channel->on_message(from, r);
            break;
          case net::kMuxAbc:
            tpp->abc->on_message(from, r);
            break;
          case net::kMuxEngine:
            tpp->engine->on_message(from, r);
            break;
          default:
            break;
        }
      } catch (const ParseError&) {
      }
      tpp->delivered.store(tpp->engine->delivered_ids().size(),
                           std::memory_order_relaxed);
    });
    tp.engine->start();
  }

  for (const auto& [tx, at] : plan) {
    for (std::uint32_t p = 0; p < cfg.n; ++p) {
      auto* tpp = &parties[p];
      Transaction copy = tx;
      tpp->sched->post(at[p], kNoParty, [tpp, copy = std::move(copy)] {
        tpp->engine->on_client_submit(copy);
      });
    }
  }

  // Wait for quiescence (all transactions delivered everywhere) or the
  // wall-clock deadline.
  const std::uint64_t expect = result.injected_ids.size();
  const auto deadline =
      wall_start + std::chrono::microseconds(scenario.duration_us);
  bool quiesced = false;
  while (std::chrono::steady_clock::now() < deadline) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    bool all = true;
    for (auto& tp : parties)
      if (tp.delivered.load(std::memory_order_relaxed) < expect) all = false;
    if (all) {
      quiesced = true;
      // Grace period so in-flight tail messages settle.
      std::this_thread::sleep_for(std::chrono::milliseconds(200));
      break;
    }
  }

  for (auto& tp : parties) tp.sched->stop();
  for (auto& tp : parties) tp.network->shutdown();

  result.trace = std::make_unique<Tracer>(cfg.n);
  for (std::uint32_t i = 0; i < cfg.n; ++i)
    result.trace->merge_party(*parties[i].tracer, i);

  result.metrics.quiesced = quiesced;
  compute_metrics(scenario, *result.trace, result.correct,
                  result.first_arrival_us, result.metrics);
  for (std::uint32_t i = 0; i < cfg.n; ++i) {
    result.metrics.dropped_mac += parties[i].links->stats().dropped_mac;
    result.metrics.dropped_replay += parties[i].links->stats().dropped_replay;
    result.metrics.view_changes += parties[i].abc->stats().view_changes;
  }
  result.delivered_log = parties[0].engine->delivered_log();
  result.trace_digest = result.trace->trace_digest();
  result.metrics.wall_ms = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - wall_start)
                               .count();
  return result;
}

}  // namespace qof::sim
