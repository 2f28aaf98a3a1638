#include "qof/oracle.hpp"

#include <map>

namespace qof::sim {

namespace {

std::string id8(const Digest& d) { return short_hex(d); }

struct FlatBatch {
  std::uint64_t round;
  std::uint32_t seq;
  std::set<Digest> txs;

  bool operator==(const FlatBatch& o) const = default;
};

std::vector<FlatBatch> flatten(const PartyTrace& p) {
  std::vector<FlatBatch> out;
  for (const auto& b : p.batches)
    out.push_back({b.round, b.seq, {b.txs.begin(), b.txs.end()}});
  return out;
}

}  // namespace

std::vector<Violation> oracle_abc(const Tracer& trace,
                                  const std::vector<bool>& correct,
                                  const std::set<Digest>& allowed_ids,
                                  bool expect_all_delivered,
                                  const std::set<Digest>& injected_ids) {
  std::vector<Violation> out;
  std::vector<std::uint32_t> parties;
  for (std::uint32_t p = 0; p < trace.n(); ++p)
    if (correct[p]) parties.push_back(p);
  if (parties.empty()) return out;

  // Agreement + total order: batch sequences are prefix-consistent.
  const auto ref = flatten(trace.party(parties[0]));
  for (std::uint32_t p : parties) {
    const auto mine = flatten(trace.party(p));
    const std::size_t common = std::min(ref.size(), mine.size());
    for (std::size_t i = 0; i < common; ++i) {
      if (!(ref[i] == mine[i])) {
        out.push_back({"total_order",
                       "batch " + std::to_string(i) + " differs between party " +
                           std::to_string(parties[0]) + " and party " +
                           std::to_string(p)});
        break;
      }
    }
  }

  // No duplication within each party's log.
  for (std::uint32_t p : parties) {
    std::set<Digest> seen;
    for (const auto& b : trace.party(p).batches)
      for (const auto& id : b.txs)
        if (!seen.insert(id).second)
          out.push_back({"no_duplication", "party " + std::to_string(p) +
                                               " delivered " + id8(id) +
                                               " twice"});
  }

  // No creation.
  for (std::uint32_t p : parties) {
    for (const auto& b : trace.party(p).batches)
      for (const auto& id : b.txs)
        if (!allowed_ids.count(id))
          out.push_back({"no_creation", "party " + std::to_string(p) +
                                            " delivered unknown tx " +
                                            id8(id)});
  }

  if (expect_all_delivered) {
    for (std::uint32_t p : parties) {
      std::set<Digest> delivered;
      for (const auto& b : trace.party(p).batches)
        delivered.insert(b.txs.begin(), b.txs.end());
      for (const auto& id : injected_ids)
        if (!delivered.count(id))
          out.push_back({"weak_validity", "party " + std::to_string(p) +
                                              " never delivered " + id8(id)});
    }
  }
  return out;
}

std::vector<Violation> oracle_fairness(const Tracer& trace,
                                       const std::vector<bool>& correct,
                                       const Config& cfg) {
  std::vector<Violation> out;
  std::vector<std::uint32_t> parties;
  for (std::uint32_t p = 0; p < trace.n(); ++p)
    if (correct[p]) parties.push_back(p);
  if (parties.empty()) return out;

  // Of-broadcast positions per correct party.
  std::vector<std::map<Digest, std::size_t>> bcast_pos(trace.n());
  std::set<Digest> universe;
  for (std::uint32_t p : parties) {
    const auto& order = trace.party(p).of_broadcast_order;
    for (std::size_t i = 0; i < order.size(); ++i) {
      bcast_pos[p].emplace(order[i], i);
      universe.insert(order[i]);
    }
  }

  // Delivery batch index per correct party.
  std::vector<std::map<Digest, std::size_t>> deliver_idx(trace.n());
  for (std::uint32_t p : parties) {
    std::size_t idx = 0;
    for (const auto& b : trace.party(p).batches) {
      for (const auto& id : b.txs) deliver_idx[p].emplace(id, idx);
      ++idx;
    }
  }

  auto b_count = [&](const Digest& a, const Digest& b) {
    std::uint32_t count = 0;
    for (std::uint32_t p : parties) {
      auto ia = bcast_pos[p].find(a);
      auto ib = bcast_pos[p].find(b);
      if (ia != bcast_pos[p].end() && ib != bcast_pos[p].end() &&
          ia->second < ib->second)
        ++count;
    }
    return count;
  };

  const std::int64_t threshold = 2 * static_cast<std::int64_t>(cfg.f) +
                                 static_cast<std::int64_t>(cfg.kappa);
  std::vector<Digest> ids(universe.begin(), universe.end());
  for (const auto& a : ids) {
    for (const auto& b : ids) {
      if (a == b) continue;
      const std::int64_t bab = b_count(a, b);
      const std::int64_t bba = b_count(b, a);
      if (bab <= bba + threshold) continue;  // premise unmet, any order fine

      for (std::uint32_t p : parties) {
        auto da = deliver_idx[p].find(a);
        auto db = deliver_idx[p].find(b);
        if (db == deliver_idx[p].end()) continue;  // b undelivered: fine
        if (da == deliver_idx[p].end()) {
          out.push_back({"fairness",
                         "party " + std::to_string(p) + " delivered " +
                             id8(b) + " but never " + id8(a) + " (b=" +
                             std::to_string(bab) + " vs " +
                             std::to_string(bba) + ", 2f+k=" +
                             std::to_string(threshold) + ")"});
        } else if (db->second < da->second) {
          out.push_back({"fairness",
                         "party " + std::to_string(p) + " delivered " +
                             id8(b) + " strictly before " + id8(a) + " (b=" +
                             std::to_string(bab) + " vs " +
                             std::to_string(bba) + ", 2f+k=" +
                             std::to_string(threshold) + ")"});
        }
      }
    }
  }
  return out;
}

std::vector<Violation> oracle_bcch_consistency(
    const Tracer& trace, const std::vector<bool>& correct) {
  std::vector<Violation> out;
  std::map<std::pair<std::uint32_t, std::uint64_t>, Digest> first;
  for (std::uint32_t p = 0; p < trace.n(); ++p) {
    if (!correct[p]) continue;
    for (const auto& d : trace.party(p).bcch_delivers) {
      auto key = std::make_pair(d.sender, d.instance);
      auto [it, inserted] = first.emplace(key, d.tx);
      if (!inserted && it->second != d.tx)
        out.push_back(
            {"bcch_consistency",
             "instance (" + std::to_string(d.sender) + "," +
                 std::to_string(d.instance) +
                 ") delivered two different transactions at correct parties"});
    }
  }
  return out;
}

}  // namespace qof::sim
