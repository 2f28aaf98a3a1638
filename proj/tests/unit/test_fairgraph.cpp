#include <doctest.h>

#include <algorithm>
#include <qof/fairgraph.hpp>
#include <qof/rng.hpp>

using namespace qof;
using namespace qof::fair;

namespace {

TxId tid(std::uint8_t v) {
  TxId id{};
  id[0] = v;
  return id;
}

// The worked three-party trace: local receive orders per party, round 1.
// p0 observes tx4<tx2<tx3<tx1, p1 observes tx4<tx3<tx1, p2 observes tx4<tx1.
TxLogs figure_logs_round1() {
  return {
      {tid(4), tid(2), tid(3), tid(1)},
      {tid(4), tid(3), tid(1)},
      {tid(4), tid(1)},
  };
}

// Round 2: the stragglers arrived, extending every order to all four.
TxLogs figure_logs_round2() {
  return {
      {tid(4), tid(2), tid(3), tid(1)},
      {tid(4), tid(3), tid(1), tid(2)},
      {tid(4), tid(1), tid(2), tid(3)},
  };
}

Config cfg3() {
  Config c;
  c.n = 3;
  c.f = 0;
  c.kappa = 0;
  return c;
}

// Brute-force mutual-reachability oracle (Floyd-Warshall closure).
std::vector<std::set<Digest>> reachability_components(const Graph& g) {
  std::vector<Digest> keys;
  for (const auto& [k, v] : g.vertices) keys.push_back(k);
  const std::size_t n = keys.size();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  auto index = [&](const Digest& k) {
    return static_cast<std::size_t>(
        std::find(keys.begin(), keys.end(), k) - keys.begin());
  };
  for (std::size_t i = 0; i < n; ++i) {
    reach[i][i] = true;
    for (const auto& to : g.vertices.at(keys[i]).out) reach[i][index(to)] = true;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (reach[i][k] && reach[k][j]) reach[i][j] = true;

  std::vector<std::set<Digest>> comps;
  std::vector<bool> assigned(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (assigned[i]) continue;
    std::set<Digest> comp;
    for (std::size_t j = 0; j < n; ++j)
      if (reach[i][j] && reach[j][i]) {
        comp.insert(keys[j]);
        assigned[j] = true;
      }
    comps.push_back(std::move(comp));
  }
  return comps;
}

Graph random_graph(Rng& rng, std::size_t max_vertices) {
  Graph g;
  std::size_t n = 1 + rng.below(max_vertices);
  for (std::size_t i = 0; i < n; ++i) g.add_tx_vertex(tid(static_cast<std::uint8_t>(i + 1)));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && rng.below(100) < 25)
        g.add_edge(tid(static_cast<std::uint8_t>(i + 1)),
                   tid(static_cast<std::uint8_t>(j + 1)));
  return g;
}

}  // namespace

TEST_CASE("round-1 vertices: unique undelivered transactions in the cut") {
  auto logs = figure_logs_round1();
  auto v = build_vertices(logs, {4, 3, 2}, {});
  CHECK(v.size() == 4);

  CHECK(build_vertices(logs, {0, 0, 0}, {}).empty());

  auto logs2 = figure_logs_round2();
  auto v2 = build_vertices(logs2, {4, 4, 4}, {tid(4)});
  CHECK(v2 == std::vector<TxId>{tid(1), tid(2), tid(3)});
}

TEST_CASE("cut larger than a log is a contract violation") {
  auto logs = figure_logs_round1();
  CHECK_THROWS_AS(build_vertices(logs, {5, 3, 2}, {}), ContractViolation);
}

TEST_CASE("round-1 precedence counts match the hand count") {
  auto m = build_precedence(figure_logs_round1(), {4, 3, 2}, cfg3());
  CHECK(m.at(tid(4), tid(1)) == 3);
  CHECK(m.at(tid(1), tid(4)) == 0);
  CHECK(m.at(tid(2), tid(3)) == 1);  // only p0 ordered both
  CHECK(m.at(tid(3), tid(2)) == 0);
  CHECK(m.at(tid(4), tid(3)) == 2);
  CHECK(m.at(tid(4), tid(2)) == 1);

  TxLogs single = {{tid(1), tid(2)}};
  Config c1 = cfg3();
  c1.n = 1;
  auto ms = build_precedence(single, {2}, c1);
  CHECK(ms.at(tid(1), tid(2)) == 1);
  CHECK(ms.at(tid(2), tid(1)) == 0);
}

TEST_CASE("precedence respects the cut prefix") {
  auto m = build_precedence(figure_logs_round2(), {4, 3, 2}, cfg3());
  // p1's tx2 sits at position 3, outside cut 3; p2's tx2 outside cut 2.
  CHECK(m.at(tid(2), tid(3)) == 1);
  CHECK(m.at(tid(3), tid(2)) == 0);
}

TEST_CASE("pair direction counts never exceed n") {
  Rng rng(21);
  for (int iter = 0; iter < 100; ++iter) {
    Config c = cfg3();
    TxLogs logs(3);
    std::vector<std::uint64_t> cut(3);
    for (int j = 0; j < 3; ++j) {
      std::vector<TxId> perm;
      for (std::uint8_t k = 1; k <= 5; ++k) perm.push_back(tid(k));
      for (std::size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[rng.below(i)]);
      logs[j] = perm;
      cut[j] = rng.below(6);
    }
    auto m = build_precedence(logs, cut, c);
    for (std::uint8_t a = 1; a <= 5; ++a)
      for (std::uint8_t b = 1; b <= 5; ++b) {
        if (a == b) continue;
        CHECK(m.at(tid(a), tid(b)) + m.at(tid(b), tid(a)) <= c.n);
      }
  }
}

TEST_CASE("edge rule on the round-1 counts") {
  auto m = build_precedence(figure_logs_round1(), {4, 3, 2}, cfg3());
  auto v = build_vertices(figure_logs_round1(), {4, 3, 2}, {});
  Graph g = add_edges(m, v);

  // M[4][1]=3, M[1][4]=0: max{3, 3-0-3=0... n-f-M = 3-0-0=3} > 0 holds one way.
  CHECK(g.has_edge(tid(4), tid(1)));
  CHECK_FALSE(g.has_edge(tid(1), tid(4)));
  // M[2][3]=1, M[3][2]=0: both directions hold, a 2-cycle feeds the collapse.
  CHECK(g.has_edge(tid(2), tid(3)));
  CHECK(g.has_edge(tid(3), tid(2)));
}

TEST_CASE("edge rule makes never-co-ordered pairs mutually constrained") {
  PrecedenceMatrix m;
  m.n = 4;
  m.f = 1;
  m.kappa = 0;
  std::vector<TxId> v{tid(1), tid(2)};
  Graph g = add_edges(m, v);
  // max{0, 4-1-0} = 3 > 0-1+0 = -1 in both directions.
  CHECK(g.has_edge(tid(1), tid(2)));
  CHECK(g.has_edge(tid(2), tid(1)));
}

TEST_CASE("round-1 graph collapses to a single vertex and nothing delivers") {
  auto logs = figure_logs_round1();
  std::vector<std::uint64_t> cut{4, 3, 2};
  auto m = build_precedence(logs, cut, cfg3());
  auto v = build_vertices(logs, cut, {});
  Graph h = collapse(add_edges(m, v));
  REQUIRE(h.size() == 1);
  CHECK(h.vertices.begin()->second.members ==
        std::vector<TxId>{tid(1), tid(2), tid(3), tid(4)});

  auto occ = occurrences(logs, cut);
  CHECK(occ[tid(2)] == 1);  // below the (3+0-0)/2 threshold
  CHECK(extract_deliverable(h, occ, cfg3()).empty());
}

TEST_CASE("round-2 graph condenses to {tx4} -> {tx1,tx2,tx3} and delivers") {
  auto logs = figure_logs_round2();
  std::vector<std::uint64_t> cut{4, 4, 4};
  auto m = build_precedence(logs, cut, cfg3());
  auto v = build_vertices(logs, cut, {});
  Graph h = collapse(add_edges(m, v));
  REQUIRE(h.size() == 2);

  const Vertex* solo = nullptr;
  const Vertex* triple = nullptr;
  for (const auto& [k, vert] : h.vertices)
    (vert.members.size() == 1 ? solo : triple) = &vert;
  REQUIRE(solo);
  REQUIRE(triple);
  CHECK(solo->members == std::vector<TxId>{tid(4)});
  CHECK(triple->members == std::vector<TxId>{tid(1), tid(2), tid(3)});
  CHECK(h.has_edge(solo->key, triple->key));
  CHECK_FALSE(h.has_edge(triple->key, solo->key));

  auto occ = occurrences(logs, cut);
  auto batches = extract_deliverable(h, occ, cfg3());
  REQUIRE(batches.size() == 2);
  CHECK(batches[0] == std::vector<TxId>{tid(4)});
  CHECK(batches[1] == std::vector<TxId>{tid(1), tid(2), tid(3)});
}

TEST_CASE("collapse: DAG fixed point and degenerate inputs") {
  Graph g;
  g.add_tx_vertex(tid(1));
  g.add_tx_vertex(tid(2));
  g.add_tx_vertex(tid(3));
  g.add_edge(tid(1), tid(2));
  g.add_edge(tid(2), tid(3));
  Graph h = collapse(g);
  CHECK(h.size() == 3);
  CHECK(h.has_edge(tid(1), tid(2)));
  CHECK(h.has_edge(tid(2), tid(3)));
  CHECK_FALSE(h.has_edge(tid(1), tid(3)));

  Graph empty;
  CHECK(collapse(empty).size() == 0);
  Graph one;
  one.add_tx_vertex(tid(9));
  CHECK(collapse(one).size() == 1);
}

TEST_CASE("scc equals the reachability oracle on random digraphs") {
  Rng rng(1234);
  for (int iter = 0; iter < 200; ++iter) {
    Graph g = random_graph(rng, 12);
    auto mine = scc(g);
    auto oracle = reachability_components(g);

    std::set<std::set<Digest>> a, b;
    for (auto& c : mine) a.insert(std::set<Digest>(c.begin(), c.end()));
    for (auto& c : oracle) b.insert(c);
    CHECK(a == b);
  }
}

TEST_CASE("scc handles 2-cycles and empty graphs") {
  Graph g;
  g.add_tx_vertex(tid(1));
  g.add_tx_vertex(tid(2));
  g.add_edge(tid(1), tid(2));
  g.add_edge(tid(2), tid(1));
  auto comps = scc(g);
  REQUIRE(comps.size() == 1);
  CHECK(comps[0].size() == 2);

  Graph empty;
  CHECK(scc(empty).empty());
}

TEST_CASE("collapse output is acyclic and preserves membership") {
  Rng rng(777);
  for (int iter = 0; iter < 300; ++iter) {
    Graph g = random_graph(rng, 10);
    Graph h = collapse(g);
    CHECK(is_acyclic(h));

    std::set<Digest> before, after;
    for (const auto& [k, v] : g.vertices)
      before.insert(v.members.begin(), v.members.end());
    std::size_t member_total = 0;
    for (const auto& [k, v] : h.vertices) {
      after.insert(v.members.begin(), v.members.end());
      member_total += v.members.size();
    }
    CHECK(before == after);
    CHECK(member_total == after.size());  // member sets are disjoint
  }
}

TEST_CASE("add_edges is a pure function of (M, n, f, kappa)") {
  auto logs = figure_logs_round1();
  auto m = build_precedence(logs, {4, 3, 2}, cfg3());
  auto v = build_vertices(logs, {4, 3, 2}, {});
  auto g1 = add_edges(m, v);
  auto g2 = add_edges(m, v);
  REQUIRE(g1.size() == g2.size());
  for (const auto& [k, vert] : g1.vertices)
    CHECK(vert.out == g2.vertices.at(k).out);
}

TEST_CASE("extraction emits independent stable sources in id order") {
  Graph g;
  g.add_tx_vertex(tid(1));
  g.add_tx_vertex(tid(2));
  Config c = cfg3();
  std::map<TxId, std::uint32_t> occ{{tid(1), 3}, {tid(2), 3}};
  auto batches = extract_deliverable(g, occ, c);
  REQUIRE(batches.size() == 2);
  CHECK(batches[0] == std::vector<TxId>{tid(1)});
  CHECK(batches[1] == std::vector<TxId>{tid(2)});
}

TEST_CASE("extraction stops at the first unstable source") {
  // a -> b with a unstable: b stays even though stable.
  Graph g;
  g.add_tx_vertex(tid(1));
  g.add_tx_vertex(tid(2));
  g.add_edge(tid(1), tid(2));
  Config c = cfg3();
  std::map<TxId, std::uint32_t> occ{{tid(1), 1}, {tid(2), 3}};
  CHECK(extract_deliverable(g, occ, c).empty());
}

TEST_CASE("extraction rejects cyclic input") {
  Graph g;
  g.add_tx_vertex(tid(1));
  g.add_tx_vertex(tid(2));
  g.add_edge(tid(1), tid(2));
  g.add_edge(tid(2), tid(1));
  CHECK_THROWS_AS(extract_deliverable(g, {}, cfg3()), ContractViolation);
}

TEST_CASE("stability threshold uses exact integer arithmetic") {
  Config c;
  c.n = 4;
  c.f = 1;
  c.kappa = 0;  // threshold (4+1-0)/2 = 2.5
  CHECK_FALSE(is_stable(2, c));
  CHECK(is_stable(3, c));

  c.kappa = 1;  // threshold 2.0
  CHECK(is_stable(2, c));
  CHECK_FALSE(is_stable(1, c));

  Config paper = cfg3();  // threshold 1.5
  CHECK_FALSE(is_stable(1, paper));
  CHECK(is_stable(2, paper));
}

TEST_CASE("digraph export lists members and edges deterministically") {
  Graph g;
  g.add_tx_vertex(tid(1));
  g.add_tx_vertex(tid(2));
  g.add_edge(tid(1), tid(2));
  std::string d = export_digraph(g);
  CHECK(d.find("->") != std::string::npos);
  CHECK(d.find("# ") != std::string::npos);
  CHECK(d == export_digraph(g));
}
