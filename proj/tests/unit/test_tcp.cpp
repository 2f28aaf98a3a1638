#include <doctest.h>

#include <atomic>
#include <chrono>
#include <thread>

#include <qof/harness.hpp>
#include <qof/tcp_network.hpp>
#include <qof/transport.hpp>

using namespace qof;

TEST_CASE("topology parsing") {
  auto topo = net::parse_topology("0 127.0.0.1:9000\n1 127.0.0.1:9001\n");
  REQUIRE(topo.size() == 2);
  CHECK(topo[0].host == "127.0.0.1");
  CHECK(topo[1].port == 9001);
  CHECK_THROWS_AS(net::parse_topology("0 localhost\n"), ConfigError);
  CHECK_THROWS_AS(net::parse_topology("1 127.0.0.1:9001\n"), ConfigError);
}

TEST_CASE("authenticated links over tcp loopback deliver and filter") {
  auto topo = net::local_topology(2, 38640);
  auto keys = KeyMaterial::generate(2, 9);
  net::TcpNetwork na(PartyId{0}, topo);
  net::TcpNetwork nb(PartyId{1}, topo);
  net::AuthLinks a(PartyId{0}, keys[0], na);
  net::AuthLinks b(PartyId{1}, keys[1], nb);

  std::atomic<int> got{0};
  b.set_deliver([&](PartyId from, const Bytes& body) {
    if (from.index == 0 && body == to_bytes("over tcp")) ++got;
  });

  a.send(PartyId{1}, to_bytes("over tcp"));
  for (int i = 0; i < 100 && got.load() == 0; ++i)
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  CHECK(got.load() == 1);

  // A frame with a corrupted MAC byte is dropped silently.
  Bytes frame = [&] {
    ByteWriter w;
    w.u32(0);
    w.u32(1);
    w.u64(7);
    w.bytes(to_bytes("bad"));
    Mac mac{};
    w.raw(mac);
    return w.take();
  }();
  na.send_frame(PartyId{0}, PartyId{1}, frame);
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  CHECK(got.load() == 1);
  CHECK(b.stats().dropped_mac >= 1);

  na.shutdown();
  nb.shutdown();
}

TEST_CASE("full protocol stack over tcp loopback reaches agreement") {
  sim::Scenario sc;
  sc.name = "tcp-smoke";
  sc.config = Config{4, 1, 0, 1, 16};
  sc.seed = 2;
  sc.tx_count = 12;
  sc.payload_size = 64;
  sc.inject_window_us = 200'000;
  sc.jitter_us = 5'000;
  sc.relay_delay_us = 100'000;
  sc.duration_us = 20'000'000;  // 20 s wall-clock cap

  auto topo = net::local_topology(4, 38700);
  auto r = run_tcp(sc, topo);
  CHECK(r.metrics.quiesced);
  CHECK(r.metrics.delivered == sc.tx_count);

  auto abc = sim::oracle_abc(*r.trace, r.correct, r.allowed_ids(), true,
                             r.injected_ids);
  for (const auto& v : abc) {
    CAPTURE(v.kind);
    CAPTURE(v.detail);
    CHECK(false);
  }
  auto fair = sim::oracle_fairness(*r.trace, r.correct, sc.config);
  CHECK(fair.empty());
}
