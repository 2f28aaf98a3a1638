#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qof/engine.hpp"
#include "qof/types.hpp"

namespace qof::sim {

struct FaultSpec {
  enum class Behavior { Crash, Mute, EquivocateBcch, LieStatus, Frontrun };

  std::uint32_t party = 0;
  Behavior behavior = Behavior::Crash;

  std::uint64_t at_us = 0;  // crash time

  // Front-running: the attacker sees the victim transaction advance_us
  // before everyone else and immediately of-broadcasts attack_count own
  // transactions. Optionally it also plants them at direct_targets like a
  /// client submission, direct_lead_us before the victim's arrival there.
  std::uint32_t victim_client = 0;
  std::uint64_t victim_seq = 0;
  std::uint32_t attack_count = 2;
  std::uint64_t advance_us = 0;
  std::vector<std::uint32_t> direct_targets;
  std::uint64_t direct_lead_us = 0;

  static const char* name(Behavior b);
};

/// Explicit client arrival script: one transaction and the virtual time it
/// reaches each party (parties absent from the map never receive it from
/// the client).
struct ScriptedArrival {
  std::uint32_t client = 0;
  std::uint64_t seq = 0;
  Bytes payload;
  std::map<std::uint32_t, std::uint64_t> at_us;
};

struct Scenario {
  std::string name = "scenario";
  Config config;
  std::uint64_t seed = 1;

  std::uint32_t n_clients = 1;
  std::uint32_t tx_count = 20;
  std::uint32_t payload_size = 256;

  std::uint64_t d_min_us = 1000;
  std::uint64_t d_max_us = 5000;
  std::uint64_t proc_cost_us = 20;
  std::uint64_t relay_delay_us = 50000;
  std::uint64_t inject_window_us = 200000;
  std::uint64_t jitter_us = 2000;
  std::uint64_t duration_us = 60000000;
  std::uint64_t fetch_retry_us = 100000;

  engine::RoundTrigger trigger;
  std::vector<FaultSpec> faults;
  std::vector<ScriptedArrival> arrivals;  // overrides the generated load
  bool baseline = false;  // plain sequencer, no fairness layer

  void validate() const;
  bool party_correct(std::uint32_t p) const;
  std::uint64_t mean_delay_us() const { return (d_min_us + d_max_us) / 2; }
  std::uint64_t abc_timeout_base_us() const {
    return std::max<std::uint64_t>(10 * mean_delay_us(), 1000);
  }

  static Scenario from_json_text(const std::string& text);
  static Scenario from_json_file(const std::string& path);
  std::string to_json_text() const;
};

}  // namespace qof::sim
