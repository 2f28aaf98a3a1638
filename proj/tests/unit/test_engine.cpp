#include <doctest.h>

#include <qof/engine.hpp>
#include <qof/harness.hpp>
#include <qof/rng.hpp>

#include "sim_fixture.hpp"

using namespace qof;
using namespace qof::test;

namespace {

vbc::ClockMatrix matrix_of_columns(const SimFixture& fx, std::uint64_t round,
                                   const std::vector<std::vector<std::uint64_t>>& rows) {
  vbc::ClockMatrix m;
  m.round = round;
  for (std::uint32_t p = 0; p < rows.size(); ++p) {
    vbc::ClockRow row;
    row.vc = VectorClock(fx.cfg.n);
    for (std::uint32_t j = 0; j < fx.cfg.n; ++j) row.vc[j] = rows[p][j];
    row.sig = fx.keys[p].sign(SignDomain::Status,
                              vbc::status_sign_bytes(round, row.vc));
    m.rows.emplace(p, std::move(row));
  }
  return m;
}

// Independent oracle: largest v such that more than f column entries are
// at least v, found by enumerating candidate thresholds.
std::uint64_t cut_by_enumeration(const std::vector<std::uint64_t>& column,
                                 std::uint32_t f) {
  std::uint64_t best = 0;
  std::uint64_t cap = 0;
  for (auto x : column) cap = std::max(cap, x);
  for (std::uint64_t v = 1; v <= cap; ++v) {
    std::uint32_t at_least = 0;
    for (auto x : column)
      if (x >= v) ++at_least;
    if (at_least > f) best = v;
  }
  return best;
}

}  // namespace

TEST_CASE("cut of the worked example is [4,3,2]") {
  SimFixture fx(3, 0);
  auto m = matrix_of_columns(fx, 1,
                             {{4, 3, 2}, {4, 3, 2}, {4, 3, 2}});
  CHECK(engine::compute_cut(m, 3, 0) ==
        std::vector<std::uint64_t>{4, 3, 2});
}

TEST_CASE("cut picks the largest value with more than f support") {
  SimFixture fx(4, 1);
  // Column 0 = [5,3,0,2]: two entries >= 3 (more than f=1), only one >= 4.
  auto m = matrix_of_columns(
      fx, 1, {{5, 4, 0, 0}, {3, 4, 0, 0}, {0, 4, 0, 0}, {2, 4, 0, 0}});
  auto cut = engine::compute_cut(m, 4, 1);
  CHECK(cut[0] == 3);
  CHECK(cut[1] == 4);  // unanimous column
  CHECK(cut[2] == 0);
  CHECK(cut[3] == 0);
}

TEST_CASE("cut matches threshold enumeration on random columns") {
  SimFixture fx4(4, 0);
  Rng rng(5150);
  for (int iter = 0; iter < 400; ++iter) {
    std::uint32_t f = static_cast<std::uint32_t>(rng.below(3));
    std::uint32_t rows = f + 1 + static_cast<std::uint32_t>(rng.below(4));
    std::vector<std::vector<std::uint64_t>> data(rows,
                                                 std::vector<std::uint64_t>(4));
    for (auto& r : data)
      for (auto& x : r) x = rng.below(12);

    // Build an unsigned matrix directly; compute_cut only reads the clocks.
    vbc::ClockMatrix m;
    m.round = 1;
    for (std::uint32_t p = 0; p < rows; ++p) {
      vbc::ClockRow row;
      row.vc = VectorClock(4);
      for (std::uint32_t j = 0; j < 4; ++j) row.vc[j] = data[p][j];
      m.rows.emplace(p, std::move(row));
    }
    auto cut = engine::compute_cut(m, 4, f);
    for (std::uint32_t j = 0; j < 4; ++j) {
      std::vector<std::uint64_t> column;
      for (std::uint32_t p = 0; p < rows; ++p) column.push_back(data[p][j]);
      CHECK(cut[j] == cut_by_enumeration(column, f));
    }
  }
}

TEST_CASE("quiescent run delivers everything exactly once at every party") {
  sim::Scenario sc;
  sc.name = "engine-basic";
  sc.config = Config{4, 1, 0, 1, 16};
  sc.seed = 11;
  sc.tx_count = 12;
  sc.payload_size = 64;
  sc.inject_window_us = 100'000;
  sc.duration_us = 60'000'000;

  auto result = sim::run(sc);
  CHECK(result.metrics.quiesced);
  CHECK(result.metrics.delivered == 12);

  auto abc = sim::oracle_abc(*result.trace, result.correct,
                             result.allowed_ids(), true, result.injected_ids);
  CHECK(abc.empty());
  auto fair = sim::oracle_fairness(*result.trace, result.correct, sc.config);
  CHECK(fair.empty());
}

TEST_CASE("missing transactions are fetched with certificates") {
  // An equivocating sender withholds its finals from the upper half of the
  // parties. The instances still enter the cut through the other parties'
  // status rows, so the starved party has to close the gap with certified
  // transfers before it can process the round.
  sim::Scenario sc;
  sc.name = "engine-missing";
  sc.config = Config{4, 1, 0, 1, 16};
  sc.seed = 23;
  sc.tx_count = 10;
  sc.payload_size = 32;
  sc.inject_window_us = 80'000;
  sc.duration_us = 120'000'000;
  sim::FaultSpec eq;
  eq.party = 3;
  eq.behavior = sim::FaultSpec::Behavior::EquivocateBcch;
  sc.faults.push_back(eq);

  auto result = sim::run(sc);
  CHECK(result.metrics.quiesced);
  CHECK(result.metrics.missing_requests > 0);
  CHECK(result.metrics.delivered == 10);
  auto abc = sim::oracle_abc(*result.trace, result.correct,
                             result.allowed_ids(), false, result.injected_ids);
  CHECK(abc.empty());
  auto cons = sim::oracle_bcch_consistency(*result.trace, result.correct);
  CHECK(cons.empty());
}

TEST_CASE("duplicate client submissions consume one channel instance") {
  sim::Scenario sc;
  sc.name = "engine-dup";
  sc.config = Config{4, 1, 0, 1, 16};
  sc.seed = 5;
  sc.tx_count = 0;
  sc.duration_us = 30'000'000;
  sim::ScriptedArrival a;
  a.client = 0;
  a.seq = 0;
  a.payload = to_bytes("only");
  for (std::uint32_t p = 0; p < 4; ++p) a.at_us[p] = 1000;
  sc.arrivals.push_back(a);
  // The same transaction arrives again later at party 0.
  sim::ScriptedArrival again = a;
  again.at_us.clear();
  again.at_us[0] = 5000;
  sc.arrivals.push_back(again);

  auto result = sim::run(sc);
  CHECK(result.metrics.quiesced);
  // Exactly one of-broadcast per party despite the duplicate.
  for (std::uint32_t p = 0; p < 4; ++p)
    CHECK(result.trace->party(p).of_broadcast_order.size() == 1);
  CHECK(result.metrics.delivered == 1);
}
