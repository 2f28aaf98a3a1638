#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qof/crypto.hpp"
#include "qof/types.hpp"

namespace qof::sim {

struct BatchRec {
  std::uint64_t round = 0;
  std::uint32_t seq = 0;
  std::vector<Digest> txs;  // sorted by id
  std::uint64_t t_us = 0;
};

struct CutRec {
  std::uint64_t round = 0;
  std::vector<std::uint64_t> values;
};

struct CollapseRec {
  std::uint64_t round = 0;
  std::vector<std::vector<Digest>> components;  // member lists, sorted
};

struct VerticesRec {
  std::uint64_t round = 0;
  std::vector<Digest> txs;
};

struct BcchDeliverRec {
  std::uint32_t sender = 0;
  std::uint64_t instance = 0;
  Digest tx{};
  std::uint64_t t_us = 0;
};

struct PartyTrace {
  std::vector<Digest> of_broadcast_order;
  std::vector<std::uint64_t> of_broadcast_t_us;
  std::vector<BcchDeliverRec> bcch_delivers;
  std::vector<CutRec> cuts;
  std::vector<VerticesRec> vertices;
  std::vector<CollapseRec> collapses;
  std::vector<BatchRec> batches;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> proposes;  // (round, t)
  std::vector<std::pair<std::uint64_t, std::uint64_t>> decides;   // (round, t)
};

/// Records the structured protocol events of one execution, and mirrors
/// them as deterministic JSON lines (fixed key order, integers and hex
/// strings only) so that a trace digest is a pure function of the run.
class Tracer {
 public:
  explicit Tracer(std::uint32_t n) : parties_(n) {}

  void of_broadcast(std::uint64_t t, std::uint32_t party,
                    const Transaction& tx);
  void bcch_deliver(std::uint64_t t, std::uint32_t party, std::uint32_t sender,
                    std::uint64_t instance, const Digest& tx);
  void status(std::uint64_t t, std::uint32_t party, std::uint64_t round,
              const VectorClock& vc);
  void propose(std::uint64_t t, std::uint32_t party, std::uint64_t round,
               std::size_t rows);
  void decide(std::uint64_t t, std::uint32_t party, std::uint64_t round,
              std::size_t rows);
  void cut(std::uint64_t t, std::uint32_t party, std::uint64_t round,
           const std::vector<std::uint64_t>& values);
  void vertices(std::uint64_t t, std::uint32_t party, std::uint64_t round,
                const std::vector<Digest>& txs);
  void collapsed(std::uint64_t t, std::uint32_t party, std::uint64_t round,
                 const std::vector<std::vector<Digest>>& components);
  void batch(std::uint64_t t, std::uint32_t party, std::uint64_t round,
             std::uint32_t seq, const std::vector<Digest>& txs);

  const PartyTrace& party(std::uint32_t p) const { return parties_.at(p); }
  std::uint32_t n() const { return static_cast<std::uint32_t>(parties_.size()); }
  const std::vector<std::string>& jsonl() const { return lines_; }

  /// Adopts one party's records from another tracer (TCP mode runs one
  /// tracer per party thread and merges afterwards).
  void merge_party(const Tracer& other, std::uint32_t p) {
    parties_.at(p) = other.parties_.at(p);
    for (const auto& l : other.lines_) lines_.push_back(l);
  }

  std::string joined() const;
  Digest trace_digest() const;

 private:
  void line(std::string s) { lines_.push_back(std::move(s)); }

  std::vector<PartyTrace> parties_;
  std::vector<std::string> lines_;
};

}  // namespace qof::sim
