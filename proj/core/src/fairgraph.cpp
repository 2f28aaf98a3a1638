#include "qof/fairgraph.hpp"

#include <algorithm>

#include "qof/errors.hpp"

namespace qof::fair {

void Graph::remove_vertex(const Digest& key) {
  vertices.erase(key);
  for (auto& [k, v] : vertices) v.out.erase(key);
}

Digest vertex_key(const std::vector<TxId>& sorted_members) {
  ByteWriter w;
  for (const auto& id : sorted_members) w.raw(id);
  return digest(w.data());
}

std::vector<TxId> build_vertices(const TxLogs& logs,
                                 const std::vector<std::uint64_t>& cut,
                                 const std::set<TxId>& delivered) {
  require(logs.size() == cut.size(), "build_vertices: cut length mismatch");
  std::set<TxId> seen;
  for (std::size_t j = 0; j < logs.size(); ++j) {
    require(cut[j] <= logs[j].size(),
            "build_vertices: cut exceeds log length (missing unresolved)");
    for (std::uint64_t i = 0; i < cut[j]; ++i) {
      if (!delivered.count(logs[j][i])) seen.insert(logs[j][i]);
    }
  }
  return {seen.begin(), seen.end()};
}

PrecedenceMatrix build_precedence(const TxLogs& logs,
                                  const std::vector<std::uint64_t>& cut,
                                  const Config& cfg) {
  require(logs.size() == cut.size(), "build_precedence: cut length mismatch");
  PrecedenceMatrix m;
  m.n = cfg.n;
  m.f = cfg.f;
  m.kappa = cfg.kappa;
  m.cut = cut;
  for (std::size_t j = 0; j < logs.size(); ++j) {
    require(cut[j] <= logs[j].size(), "build_precedence: cut exceeds log");
    // First occurrence position of each tx within this party's prefix.
    std::map<TxId, std::uint64_t> pos;
    for (std::uint64_t i = 0; i < cut[j]; ++i)
      pos.emplace(logs[j][i], i);
    for (const auto& [a, pa] : pos)
      for (const auto& [b, pb] : pos)
        if (pa < pb) ++m.counts[a][b];
  }
  return m;
}

std::map<TxId, std::uint32_t> occurrences(
    const TxLogs& logs, const std::vector<std::uint64_t>& cut) {
  std::map<TxId, std::uint32_t> occ;
  for (std::size_t j = 0; j < logs.size(); ++j) {
    std::set<TxId> in_prefix;
    for (std::uint64_t i = 0; i < cut[j]; ++i) in_prefix.insert(logs[j][i]);
    for (const auto& id : in_prefix) ++occ[id];
  }
  return occ;
}

Graph add_edges(const PrecedenceMatrix& m, const std::vector<TxId>& vertices) {
  Graph g;
  for (const auto& tx : vertices) g.add_tx_vertex(tx);
  const std::int64_t n = m.n, f = m.f, kappa = m.kappa;
  for (const auto& a : vertices) {
    for (const auto& b : vertices) {
      if (a == b) continue;
      const std::int64_t ab = m.at(a, b);
      const std::int64_t ba = m.at(b, a);
      if (std::max(ab, n - f - ba) > ba - f + kappa) g.add_edge(a, b);
    }
  }
  return g;
}

std::vector<std::vector<Digest>> scc(const Graph& g) {
  // Forward pass: explicit-stack DFS, push on finish.
  std::set<Digest> visited;
  std::vector<Digest> finish_stack;
  for (const auto& [start, sv] : g.vertices) {
    if (visited.count(start)) continue;
    std::vector<std::pair<Digest, bool>> work{{start, false}};
    while (!work.empty()) {
      auto [key, expanded] = work.back();
      work.pop_back();
      if (expanded) {
        finish_stack.push_back(key);
        continue;
      }
      if (!visited.insert(key).second) continue;
      work.emplace_back(key, true);
      const Vertex& v = g.vertices.at(key);
      for (const auto& next : v.out)
        if (!visited.count(next)) work.emplace_back(next, false);
    }
  }

  Graph t = transpose(g);

  // Reverse pass over the transposed graph in decreasing finish order.
  std::vector<std::vector<Digest>> components;
  visited.clear();
  while (!finish_stack.empty()) {
    Digest start = finish_stack.back();
    finish_stack.pop_back();
    if (visited.count(start)) continue;
    std::vector<Digest> component;
    std::vector<Digest> work{start};
    while (!work.empty()) {
      Digest key = work.back();
      work.pop_back();
      if (!visited.insert(key).second) continue;
      component.push_back(key);
      for (const auto& next : t.vertices.at(key).out)
        if (!visited.count(next)) work.push_back(next);
    }
    components.push_back(std::move(component));
  }
  return components;
}

Graph transpose(const Graph& g) {
  Graph t;
  for (const auto& [key, v] : g.vertices) {
    Vertex tv;
    tv.key = key;
    tv.members = v.members;
    t.add_vertex(std::move(tv));
  }
  for (const auto& [key, v] : g.vertices)
    for (const auto& to : v.out) t.add_edge(to, key);
  return t;
}

std::size_t indegree(const Graph& g, const Digest& key) {
  std::size_t deg = 0;
  for (const auto& [k, v] : g.vertices)
    if (v.out.count(key)) ++deg;
  return deg;
}

Graph collapse(const Graph& g) {
  if (g.size() <= 1) return g;

  auto components = scc(g);
  std::map<Digest, Digest> component_of;  // original key -> collapsed key
  Graph h;
  for (auto& comp : components) {
    std::vector<TxId> members;
    for (const auto& key : comp) {
      const auto& mv = g.vertices.at(key).members;
      members.insert(members.end(), mv.begin(), mv.end());
    }
    std::sort(members.begin(), members.end());
    Vertex v;
    v.key = comp.size() == 1 && members.size() == 1 ? members.front()
                                                    : vertex_key(members);
    v.members = std::move(members);
    for (const auto& key : comp) component_of[key] = v.key;
    h.add_vertex(std::move(v));
  }
  for (const auto& [key, v] : g.vertices) {
    const Digest& from = component_of.at(key);
    for (const auto& to_orig : v.out) {
      const Digest& to = component_of.at(to_orig);
      if (from != to) h.add_edge(from, to);
    }
  }
  return h;
}

bool is_stable(std::uint32_t occurrence, const Config& cfg) {
  // occurrence >= (n+f-kappa)/2 without floating point.
  const std::int64_t lhs = 2 * static_cast<std::int64_t>(occurrence);
  const std::int64_t rhs = static_cast<std::int64_t>(cfg.n) + cfg.f -
                           static_cast<std::int64_t>(cfg.kappa);
  return lhs >= rhs;
}

std::vector<std::vector<TxId>> extract_deliverable(
    const Graph& collapsed, const std::map<TxId, std::uint32_t>& occurrence,
    const Config& cfg) {
  require(is_acyclic(collapsed), "extract_deliverable: input has a cycle");

  Graph g = collapsed;
  std::map<Digest, std::size_t> indeg;
  for (const auto& [key, v] : g.vertices) indeg[key];
  for (const auto& [key, v] : g.vertices)
    for (const auto& to : v.out) ++indeg[to];

  std::vector<std::vector<TxId>> batches;
  while (!g.vertices.empty()) {
    // Source vertex with the smallest member transaction id.
    const Vertex* source = nullptr;
    for (const auto& [key, v] : g.vertices) {
      if (indeg[key] != 0) continue;
      if (!source || v.members.front() < source->members.front()) source = &v;
    }
    require(source != nullptr, "extract_deliverable: no source in a DAG");

    bool stable = true;
    for (const auto& tx : source->members) {
      auto it = occurrence.find(tx);
      const std::uint32_t occ = it == occurrence.end() ? 0 : it->second;
      if (!is_stable(occ, cfg)) {
        stable = false;
        break;
      }
    }
    if (!stable) break;  // nothing past an unstable source may deliver

    batches.push_back(source->members);
    Digest key = source->key;
    for (const auto& to : g.vertices.at(key).out) --indeg[to];
    indeg.erase(key);
    g.vertices.erase(key);
  }
  return batches;
}

bool is_acyclic(const Graph& g) {
  std::map<Digest, std::size_t> indeg;
  for (const auto& [key, v] : g.vertices) indeg[key];
  for (const auto& [key, v] : g.vertices)
    for (const auto& to : v.out) ++indeg[to];
  std::vector<Digest> queue;
  for (const auto& [key, deg] : indeg)
    if (deg == 0) queue.push_back(key);
  std::size_t removed = 0;
  while (!queue.empty()) {
    Digest key = queue.back();
    queue.pop_back();
    ++removed;
    for (const auto& to : g.vertices.at(key).out)
      if (--indeg[to] == 0) queue.push_back(to);
  }
  return removed == g.size();
}

std::string export_digraph(const Graph& g) {
  std::string out;
  for (const auto& [key, v] : g.vertices) {
    out += "# ";
    out += hex_encode(std::span<const std::uint8_t>(key).subspan(0, 4));
    out += ":";
    for (const auto& m : v.members) {
      out += " ";
      out += hex_encode(std::span<const std::uint8_t>(m).subspan(0, 4));
    }
    out += "\n";
  }
  for (const auto& [key, v] : g.vertices) {
    for (const auto& to : v.out) {
      out += hex_encode(std::span<const std::uint8_t>(key).subspan(0, 4));
      out += " -> ";
      out += hex_encode(std::span<const std::uint8_t>(to).subspan(0, 4));
      out += "\n";
    }
  }
  return out;
}

}  // namespace qof::fair
