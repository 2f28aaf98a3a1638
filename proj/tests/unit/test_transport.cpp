#include <doctest.h>

#include <map>

#include "sim_fixture.hpp"

using namespace qof;
using namespace qof::test;

TEST_CASE("links deliver reliably, exactly once, with authentic senders") {
  SimFixture fx(3, 0);
  std::vector<std::vector<std::pair<std::uint32_t, Bytes>>> got(3);
  for (std::uint32_t i = 0; i < 3; ++i)
    fx.links[i]->set_deliver([&, i](PartyId from, const Bytes& body) {
      got[i].emplace_back(from.index, body);
    });

  fx.links[0]->send(PartyId{1}, to_bytes("a"));
  fx.links[0]->send(PartyId{1}, to_bytes("b"));
  fx.links[2]->send(PartyId{1}, to_bytes("c"));
  CHECK(fx.run());

  REQUIRE(got[1].size() == 3);
  std::multiset<std::string> bodies;
  for (auto& [from, body] : got[1])
    bodies.insert(std::string(body.begin(), body.end()));
  CHECK(bodies == std::multiset<std::string>{"a", "b", "c"});
  CHECK(got[0].empty());
  CHECK(got[2].empty());
}

TEST_CASE("unknown destination is a configuration error") {
  SimFixture fx(3, 0);
  CHECK_THROWS_AS(fx.links[0]->send(PartyId{7}, to_bytes("x")), ConfigError);
}

namespace {

/// Captures raw frames so tests can replay or tamper with them.
struct TamperNetwork final : net::FrameNetwork {
  net::SimNetwork inner;
  std::vector<Bytes> captured;

  TamperNetwork(SimScheduler& s, std::uint32_t n)
      : inner(s, n, 100, 100, 9) {}

  void send_frame(PartyId from, PartyId to, Bytes frame) override {
    captured.push_back(frame);
    inner.send_frame(from, to, std::move(frame));
  }
  void register_sink(PartyId to, std::function<void(Bytes)> sink) override {
    inner.register_sink(to, std::move(sink));
  }
};

}  // namespace

TEST_CASE("replayed frames are filtered, tampered frames are dropped") {
  SimScheduler sched(2, 5);
  TamperNetwork net(sched, 2);
  auto keys = KeyMaterial::generate(2, 3);
  net::AuthLinks a(PartyId{0}, keys[0], net);
  net::AuthLinks b(PartyId{1}, keys[1], net);

  int delivered = 0;
  b.set_deliver([&](PartyId from, const Bytes& body) {
    CHECK(from.index == 0);
    CHECK(body == to_bytes("payload"));
    ++delivered;
  });

  a.send(PartyId{1}, to_bytes("payload"));
  CHECK(sched.run(1'000'000));
  CHECK(delivered == 1);
  REQUIRE(net.captured.size() == 1);

  // Replay the captured frame verbatim: duplicate (from, seq), filtered.
  net.inner.send_frame(PartyId{0}, PartyId{1}, net.captured[0]);
  CHECK(sched.run(2'000'000));
  CHECK(delivered == 1);
  CHECK(b.stats().dropped_replay == 1);

  // Flip one body bit: MAC verification fails, message dropped.
  Bytes bad = net.captured[0];
  bad[20] ^= 0x01;
  net.inner.send_frame(PartyId{0}, PartyId{1}, bad);
  CHECK(sched.run(3'000'000));
  CHECK(delivered == 1);
  CHECK(b.stats().dropped_mac == 1);
}

TEST_CASE("a party cannot impersonate another sender") {
  SimScheduler sched(3, 5);
  TamperNetwork net(sched, 3);
  auto keys = KeyMaterial::generate(3, 4);
  net::AuthLinks a(PartyId{0}, keys[0], net);
  net::AuthLinks b(PartyId{1}, keys[1], net);
  net::AuthLinks c(PartyId{2}, keys[2], net);

  int delivered = 0;
  b.set_deliver([&](PartyId, const Bytes&) { ++delivered; });

  a.send(PartyId{1}, to_bytes("real"));
  CHECK(sched.run(1'000'000));
  REQUIRE(net.captured.size() == 1);

  // Party 2 rewrites the from field to claim party 0 sent it; the MAC was
  // keyed on link (0,1) which party 2 does not hold, so nothing verifies.
  Bytes forged = net.captured[0];
  forged[3] = 0;  // from field low byte already 0; force a fresh seq too
  forged[11] = 0x7f;
  net.inner.send_frame(PartyId{2}, PartyId{1}, forged);
  CHECK(sched.run(2'000'000));
  CHECK(delivered == 1);
  CHECK(b.stats().dropped_mac == 1);
}

TEST_CASE("simulated delivery trace is deterministic per seed") {
  auto trace_of = [](std::uint64_t seed) {
    SimScheduler sched(3, 5);
    net::SimNetwork net(sched, 3, 0, 5000, seed);
    auto keys = KeyMaterial::generate(3, 1);
    std::vector<std::unique_ptr<net::AuthLinks>> links;
    for (std::uint32_t i = 0; i < 3; ++i)
      links.push_back(std::make_unique<net::AuthLinks>(PartyId{i}, keys[i], net));
    std::vector<std::tuple<std::uint64_t, std::uint32_t, std::string>> events;
    for (std::uint32_t i = 0; i < 3; ++i)
      links[i]->set_deliver([&, i](PartyId from, const Bytes& body) {
        events.emplace_back(sched.now_us(), i,
                            std::to_string(from.index) + ":" +
                                std::string(body.begin(), body.end()));
      });
    for (int k = 0; k < 20; ++k)
      links[k % 3]->send(PartyId{static_cast<std::uint32_t>((k + 1) % 3)},
                         to_bytes("m" + std::to_string(k)));
    sched.run(10'000'000);
    return events;
  };
  CHECK(trace_of(42) == trace_of(42));
  CHECK(trace_of(42) != trace_of(43));
}

TEST_CASE("outbound filter can drop and rewrite before authentication") {
  SimFixture fx(2, 0);
  std::vector<std::string> got;
  fx.links[1]->set_deliver([&](PartyId, const Bytes& body) {
    got.emplace_back(body.begin(), body.end());
  });

  fx.links[0]->set_outbound_filter([](PartyId, const Bytes& body) {
    net::FilterResult r;
    std::string s(body.begin(), body.end());
    if (s == "drop-me") {
      r.action = net::FilterAction::Drop;
      return r;
    }
    if (s == "mutate-me") {
      r.body = to_bytes("mutated");
      r.rewritten = true;
    }
    return r;
  });

  fx.links[0]->send(PartyId{1}, to_bytes("drop-me"));
  fx.links[0]->send(PartyId{1}, to_bytes("mutate-me"));
  fx.links[0]->send(PartyId{1}, to_bytes("plain"));
  CHECK(fx.run());

  // The rewritten body was MACed after mutation, so it authenticates.
  CHECK(got == std::vector<std::string>{"mutated", "plain"});
  CHECK(fx.links[1]->stats().dropped_mac == 0);
}
