#pragma once

#include <memory>
#include <vector>

#include <qof/bcch.hpp>
#include <qof/crypto.hpp>
#include <qof/scheduler.hpp>
#include <qof/sequencer.hpp>
#include <qof/sim_network.hpp>
#include <qof/transport.hpp>
#include <qof/types.hpp>
#include <qof/vbc.hpp>
#include <qof/wire.hpp>

namespace qof::test {

/// Minimal n-party fabric for component tests: scheduler, simulated
/// network, authenticated links, shared verification cache.
struct SimFixture {
  Config cfg;
  SimScheduler sched;
  net::SimNetwork network;
  std::vector<KeyMaterial> keys;
  VerifyCache cache;
  std::vector<std::unique_ptr<net::AuthLinks>> links;

  SimFixture(std::uint32_t n, std::uint32_t f, std::uint64_t seed = 1,
             std::uint64_t d_min_us = 500, std::uint64_t d_max_us = 1500)
      : cfg{n, f, 0, 1, 16},
        sched(n, /*proc_cost_us=*/5),
        network(sched, n, d_min_us, d_max_us, seed),
        keys(KeyMaterial::generate(n, seed)) {
    for (std::uint32_t i = 0; i < n; ++i)
      links.push_back(
          std::make_unique<net::AuthLinks>(PartyId{i}, keys[i], network));
  }

  KeyView kv(std::uint32_t i) const { return KeyView{&keys[i]}; }

  bool run(std::uint64_t deadline_us = 10'000'000) {
    return sched.run(deadline_us);
  }
};

}  // namespace qof::test
