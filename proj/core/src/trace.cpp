#include "qof/trace.hpp"

#include <sstream>

namespace qof::sim {

namespace {

std::string head(std::uint64_t t, std::uint32_t party, const char* ev) {
  std::ostringstream os;
  os << "{\"t\":" << t << ",\"p\":" << party << ",\"ev\":\"" << ev << "\"";
  return os.str();
}

std::string hex_list(const std::vector<Digest>& ids) {
  std::string out = "[";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ",";
    out += "\"" + to_hex(ids[i]) + "\"";
  }
  return out + "]";
}

std::string u64_list(const std::vector<std::uint64_t>& xs) {
  std::string out = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(xs[i]);
  }
  return out + "]";
}

}  // namespace

void Tracer::of_broadcast(std::uint64_t t, std::uint32_t party,
                          const Transaction& tx) {
  auto& p = parties_.at(party);
  p.of_broadcast_order.push_back(tx.id);
  p.of_broadcast_t_us.push_back(t);
  line(head(t, party, "of_broadcast") + ",\"tx\":\"" + to_hex(tx.id) +
       "\",\"client\":" + std::to_string(tx.client_id) +
       ",\"seq\":" + std::to_string(tx.client_seq) + "}");
}

void Tracer::bcch_deliver(std::uint64_t t, std::uint32_t party,
                          std::uint32_t sender, std::uint64_t instance,
                          const Digest& tx) {
  parties_.at(party).bcch_delivers.push_back({sender, instance, tx, t});
  line(head(t, party, "bcch_deliver") +
       ",\"sender\":" + std::to_string(sender) +
       ",\"inst\":" + std::to_string(instance) + ",\"tx\":\"" + to_hex(tx) +
       "\"}");
}

void Tracer::status(std::uint64_t t, std::uint32_t party, std::uint64_t round,
                    const VectorClock& vc) {
  line(head(t, party, "status") + ",\"round\":" + std::to_string(round) +
       ",\"vc\":" + u64_list(vc.counts) + "}");
}

void Tracer::propose(std::uint64_t t, std::uint32_t party, std::uint64_t round,
                     std::size_t rows) {
  parties_.at(party).proposes.emplace_back(round, t);
  line(head(t, party, "propose") + ",\"round\":" + std::to_string(round) +
       ",\"rows\":" + std::to_string(rows) + "}");
}

void Tracer::decide(std::uint64_t t, std::uint32_t party, std::uint64_t round,
                    std::size_t rows) {
  parties_.at(party).decides.emplace_back(round, t);
  line(head(t, party, "decide") + ",\"round\":" + std::to_string(round) +
       ",\"rows\":" + std::to_string(rows) + "}");
}

void Tracer::cut(std::uint64_t t, std::uint32_t party, std::uint64_t round,
                 const std::vector<std::uint64_t>& values) {
  parties_.at(party).cuts.push_back({round, values});
  line(head(t, party, "cut") + ",\"round\":" + std::to_string(round) +
       ",\"values\":" + u64_list(values) + "}");
}

void Tracer::vertices(std::uint64_t t, std::uint32_t party,
                      std::uint64_t round, const std::vector<Digest>& txs) {
  parties_.at(party).vertices.push_back({round, txs});
  line(head(t, party, "vertices") + ",\"round\":" + std::to_string(round) +
       ",\"txs\":" + hex_list(txs) + "}");
}

void Tracer::collapsed(std::uint64_t t, std::uint32_t party,
                       std::uint64_t round,
                       const std::vector<std::vector<Digest>>& components) {
  parties_.at(party).collapses.push_back({round, components});
  std::string comps = "[";
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (i) comps += ",";
    comps += hex_list(components[i]);
  }
  comps += "]";
  line(head(t, party, "collapsed") + ",\"round\":" + std::to_string(round) +
       ",\"components\":" + comps + "}");
}

void Tracer::batch(std::uint64_t t, std::uint32_t party, std::uint64_t round,
                   std::uint32_t seq, const std::vector<Digest>& txs) {
  parties_.at(party).batches.push_back({round, seq, txs, t});
  line(head(t, party, "batch") + ",\"round\":" + std::to_string(round) +
       ",\"seq\":" + std::to_string(seq) + ",\"txs\":" + hex_list(txs) + "}");
}

std::string Tracer::joined() const {
  std::string out;
  for (const auto& l : lines_) {
    out += l;
    out += "\n";
  }
  return out;
}

Digest Tracer::trace_digest() const {
  std::string all = joined();
  return digest(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(all.data()), all.size()));
}

}  // namespace qof::sim
