#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "qof/crypto.hpp"
#include "qof/engine.hpp"
#include "qof/oracle.hpp"
#include "qof/scenario.hpp"
#include "qof/trace.hpp"

namespace qof::net {
struct Endpoint;
}

namespace qof::sim {

struct MetricsReport {
  std::string scenario;
  std::uint64_t seed = 0;
  std::uint32_t n = 0, f = 0, kappa = 0;
  std::uint32_t payload_size = 0;
  double mean_delay_ms = 0;

  std::uint64_t injected = 0;
  std::uint64_t delivered = 0;
  std::uint64_t rounds = 0;
  std::uint64_t batches = 0;

  double span_ms = 0;            // first arrival to last delivery, virtual
  double throughput_tps = 0;     // delivered / span
  double lat_mean_ms = 0;        // arrival at protocol -> of-delivery
  double lat_median_ms = 0;
  double lat_p99_ms = 0;
  double bcch_phase_ms = 0;      // arrival -> first bcch delivery
  double consensus_phase_ms = 0; // propose -> decide, per round mean

  std::uint64_t dropped_mac = 0;
  std::uint64_t dropped_replay = 0;
  std::uint64_t discarded_proposals = 0;
  std::uint64_t view_changes = 0;
  std::uint64_t fallback_relays = 0;
  std::uint64_t missing_requests = 0;

  double wall_ms = 0;
  bool quiesced = false;

  static std::string csv_header();
  std::string csv_row() const;
};

struct RunResult {
  std::unique_ptr<Tracer> trace;
  MetricsReport metrics;
  Digest trace_digest{};
  std::vector<bool> correct;

  std::set<Digest> injected_ids;       // everything clients/attackers submitted
  std::set<Digest> byzantine_ids;      // ids fabricated by fault wrappers
  std::map<Digest, std::uint64_t> first_arrival_us;

  // Attack bookkeeping (frontrun scenarios).
  Digest victim_id{};
  std::vector<Digest> attack_ids;

  std::vector<engine::DeliveredBatch> delivered_log;  // first correct party
  std::vector<KeyMaterial> keys;

  std::set<Digest> allowed_ids() const {
    std::set<Digest> all = injected_ids;
    all.insert(byzantine_ids.begin(), byzantine_ids.end());
    return all;
  }
};

/// Runs a scenario on the deterministic simulator to quiescence (or the
/// scenario duration cap). Identical (scenario, seed) yield bit-identical
/// traces and metrics. Internal invariant violations fail fast with the
/// virtual-time position in the message.
RunResult run(const Scenario& scenario);

/// Metrics over a recorded trace; shared by the simulator and TCP runners.
void compute_metrics(const Scenario& sc, const Tracer& trace,
                     const std::vector<bool>& correct,
                     const std::map<Digest, std::uint64_t>& first_arrival_us,
                     MetricsReport& m);

struct AttackOutcome {
  std::uint32_t b_victim_first = 0;   // b(victim, attack)
  std::uint32_t b_attack_first = 0;   // b(attack, victim)
  bool premise_holds = false;
  bool attacker_preceded = false;     // attack tx strictly before victim anywhere
  bool same_batch = false;
};

struct AttackReport {
  RunResult result;
  std::vector<AttackOutcome> outcomes;  // one per attack transaction
  std::vector<Violation> fairness_violations;
};

/// Runs a front-running scenario and reports, per attack transaction,
/// whether the Definition-1 premise held and whether the attacker's
/// transaction ever strictly preceded the victim at delivery.
AttackReport attack_frontrun(const Scenario& scenario);

/// Runs a fault-free scenario over real TCP sockets with one wall-clock
/// event loop per party. Traces are not deterministic in this mode; the
/// agreement and fairness oracles still apply.
RunResult run_tcp(const Scenario& scenario,
                  const std::vector<net::Endpoint>& topology);

}  // namespace qof::sim
