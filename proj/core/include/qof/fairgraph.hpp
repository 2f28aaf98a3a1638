#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "qof/crypto.hpp"
#include "qof/types.hpp"

namespace qof::fair {

using TxId = Digest;

/// Per-party transaction logs restricted to a cut: logs[j] is the sequence
/// of transaction ids bcch-delivered from party j, and cut[j] is how much of
/// that prefix the current round considers.
using TxLogs = std::vector<std::vector<TxId>>;

/// Pairwise before-counts within a cut. counts[a][b] is the number of
/// parties in whose cut prefix a appears before b (both present).
struct PrecedenceMatrix {
  std::uint32_t n = 0;
  std::uint32_t f = 0;
  std::uint32_t kappa = 0;
  std::vector<std::uint64_t> cut;
  std::map<TxId, std::map<TxId, std::uint32_t>> counts;

  std::uint32_t at(const TxId& a, const TxId& b) const {
    auto row = counts.find(a);
    if (row == counts.end()) return 0;
    auto cell = row->second.find(b);
    return cell == row->second.end() ? 0 : cell->second;
  }
};

/// Directed dependency graph. Vertices are keyed by digest: a singleton
/// vertex's key is its transaction id; a collapsed vertex's key is the
/// digest of its sorted member ids. Edges live in each vertex's outbound
/// adjacency set.
struct Vertex {
  Digest key{};
  std::vector<TxId> members;  // sorted
  std::set<Digest> out;
};

struct Graph {
  std::map<Digest, Vertex> vertices;

  void add_vertex(Vertex v) { vertices.emplace(v.key, std::move(v)); }
  void add_tx_vertex(const TxId& tx) {
    Vertex v;
    v.key = tx;
    v.members = {tx};
    add_vertex(std::move(v));
  }
  void remove_vertex(const Digest& key);
  void add_edge(const Digest& from, const Digest& to) {
    vertices.at(from).out.insert(to);
  }
  bool has_edge(const Digest& from, const Digest& to) const {
    auto it = vertices.find(from);
    return it != vertices.end() && it->second.out.count(to) > 0;
  }
  std::size_t size() const { return vertices.size(); }
};

Digest vertex_key(const std::vector<TxId>& sorted_members);

/// All distinct transactions inside the cut that are not yet delivered;
/// sorted by id. Requires cut[j] <= logs[j].size() (missing transactions
/// already resolved).
std::vector<TxId> build_vertices(const TxLogs& logs,
                                 const std::vector<std::uint64_t>& cut,
                                 const std::set<TxId>& delivered);

PrecedenceMatrix build_precedence(const TxLogs& logs,
                                  const std::vector<std::uint64_t>& cut,
                                  const Config& cfg);

/// How many parties' cut prefixes contain each transaction.
std::map<TxId, std::uint32_t> occurrences(const TxLogs& logs,
                                          const std::vector<std::uint64_t>& cut);

/// Adds the directed edge a -> b for every ordered pair satisfying
///   max{M[a][b], n-f-M[b][a]} > M[b][a] - f + kappa .
/// Both directions may hold; pairs never ordered by anyone become mutually
/// constrained, which forces them into one collapsed vertex.
Graph add_edges(const PrecedenceMatrix& m, const std::vector<TxId>& vertices);

/// Strongly connected components (Kosaraju: forward DFS finish stack,
/// transpose, reverse visitation). Iterative, deterministic order.
std::vector<std::vector<Digest>> scc(const Graph& g);

Graph transpose(const Graph& g);
std::size_t indegree(const Graph& g, const Digest& key);

/// Condensation: one vertex per strongly connected component, members
/// merged, an edge between components iff some original cross-component
/// edge exists. Graphs with at most one vertex collapse to themselves.
Graph collapse(const Graph& g);

/// Extracts delivery sets from the collapsed (acyclic) graph: repeatedly
/// take the zero-indegree vertex with the smallest member id; if every
/// member occurs at least (n+f-kappa)/2 times within the cut, emit the
/// member set and remove the vertex, otherwise stop. The comparison is
/// exact integer arithmetic: 2*occurrence >= n+f-kappa.
std::vector<std::vector<TxId>> extract_deliverable(
    const Graph& collapsed, const std::map<TxId, std::uint32_t>& occurrence,
    const Config& cfg);

bool is_stable(std::uint32_t occurrence, const Config& cfg);

/// Cycle check used by tests and the collapse postcondition.
bool is_acyclic(const Graph& g);

/// Textual export for golden-trace diffing: one edge per line, vertex
/// member lists as comments.
std::string export_digraph(const Graph& g);

}  // namespace qof::fair
