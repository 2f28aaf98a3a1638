#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "qof/trace.hpp"
#include "qof/types.hpp"

namespace qof::sim {

struct Violation {
  std::string kind;
  std::string detail;
};

/// Atomic-broadcast properties over the correct parties' delivered batch
/// logs: agreement/total order (logs are prefix-consistent as sequences of
/// (round, seq, tx-set)), no duplication (a tx id in at most one batch per
/// party), and no creation (every delivered tx was injected or broadcast by
/// a faulty wrapper, whose fabricated ids the harness records). When
/// expect_all_delivered is set (fault-free quiescent runs), weak validity
/// is also checked: every injected tx delivered at every correct party.
std::vector<Violation> oracle_abc(const Tracer& trace,
                                  const std::vector<bool>& correct,
                                  const std::set<Digest>& allowed_ids,
                                  bool expect_all_delivered,
                                  const std::set<Digest>& injected_ids);

/// Differential order fairness over a quiescent execution. Ground truth
/// b(a,b) is the number of correct parties whose of-broadcast sequence has
/// a before b. For every ordered pair with
///   b(a,b) > b(b,a) + 2f + kappa
/// no correct party may deliver b in a strictly earlier batch than a
/// (same-batch delivery is fine), nor deliver b while never delivering a.
std::vector<Violation> oracle_fairness(const Tracer& trace,
                                       const std::vector<bool>& correct,
                                       const Config& cfg);

/// Checks the bcch consistency guarantee across parties: for every
/// (sender, instance), all correct parties delivered the same transaction.
std::vector<Violation> oracle_bcch_consistency(const Tracer& trace,
                                               const std::vector<bool>& correct);

}  // namespace qof::sim
