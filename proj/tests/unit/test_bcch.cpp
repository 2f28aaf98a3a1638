#include <doctest.h>

#include <map>

#include "sim_fixture.hpp"

using namespace qof;
using namespace qof::test;

namespace {

struct BcchHarness {
  SimFixture fx;
  std::vector<std::unique_ptr<bcch::Channel>> channels;
  // deliveries[party] = sequence of (sender, instance, tx id)
  std::vector<std::vector<std::tuple<std::uint32_t, std::uint64_t, Digest>>>
      delivered;

  explicit BcchHarness(std::uint32_t n, std::uint32_t f, std::uint64_t seed = 1)
      : fx(n, f, seed), delivered(n) {
    for (std::uint32_t i = 0; i < n; ++i) {
      channels.push_back(std::make_unique<bcch::Channel>(
          fx.cfg, PartyId{i}, fx.kv(i), *fx.links[i], fx.cache));
      channels[i]->set_deliver(
          [this, i](const bcch::BcchMessage& m, const bcch::EchoCertificate&) {
            delivered[i].emplace_back(m.from_process.index, m.round, m.tx.id);
          });
      fx.links[i]->set_deliver([this, i](PartyId from, const Bytes& body) {
        try {
          ByteReader r(body);
          if (r.u8() != net::kMuxBcch) return;
          channels[i]->on_message(from, r);
        } catch (const ParseError&) {
        }
      });
    }
  }
};

Transaction tx_of(std::uint32_t client, std::uint64_t seq) {
  return Transaction::make(client, seq, to_bytes("payload"));
}

}  // namespace

TEST_CASE("validity: a correct sender's transaction reaches all parties once") {
  BcchHarness h(4, 1);
  Transaction tx = tx_of(0, 0);
  CHECK(h.channels[0]->broadcast(tx));
  CHECK(h.fx.run());
  for (std::uint32_t p = 0; p < 4; ++p) {
    REQUIRE(h.delivered[p].size() == 1);
    CHECK(h.delivered[p][0] == std::make_tuple(0u, std::uint64_t{0}, tx.id));
  }
}

TEST_CASE("fifo: per-sender instances deliver in order without gaps") {
  BcchHarness h(4, 1);
  std::vector<Transaction> txs;
  for (int k = 0; k < 5; ++k) {
    txs.push_back(tx_of(0, static_cast<std::uint64_t>(k)));
    CHECK(h.channels[2]->broadcast(txs.back()));
  }
  CHECK(h.fx.run());
  for (std::uint32_t p = 0; p < 4; ++p) {
    REQUIRE(h.delivered[p].size() == 5);
    for (std::uint64_t k = 0; k < 5; ++k)
      CHECK(h.delivered[p][k] == std::make_tuple(2u, k, txs[k].id));
  }
}

TEST_CASE("no two disjoint echo quorums exist for n=4, f=1") {
  // Enumerate every pair of echo-voter sets; quorum is ceil((n+f+1)/2) = 3.
  const unsigned n = 4, quorum = 3;
  for (unsigned a = 0; a < (1u << n); ++a) {
    for (unsigned b = 0; b < (1u << n); ++b) {
      unsigned size_a = static_cast<unsigned>(__builtin_popcount(a));
      unsigned size_b = static_cast<unsigned>(__builtin_popcount(b));
      if (size_a < quorum || size_b < quorum) continue;
      CHECK((a & b) != 0);  // overlapping voter -> one value per instance
    }
  }
}

TEST_CASE("equivocating sender cannot split correct parties") {
  // The wrapped sender serves tx to half the parties and tx' to the rest;
  // at most one value can gather an echo quorum, and whoever receives the
  // final delivers that value.
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    BcchHarness h(4, 1, seed);
    Transaction tx = tx_of(0, 7);
    Transaction alt = tx_of(0, 8);

    h.fx.links[3]->set_outbound_filter(
        [&](PartyId to, const Bytes& body) {
          net::FilterResult r;
          try {
            ByteReader reader(body);
            if (reader.u8() != net::kMuxBcch) return r;
            if (reader.u8() != 1 /*SEND*/) return r;
            std::uint64_t round = reader.u64();
            (void)Transaction::parse(reader);
            if (to.index >= 2) {
              ByteWriter w;
              w.u8(1);
              w.u64(round);
              alt.serialize(w);
              r.body = net::mux(net::kMuxBcch, w.data());
              r.rewritten = true;
            }
          } catch (const ParseError&) {
          }
          return r;
        });

    CHECK(h.channels[3]->broadcast(tx));
    CHECK(h.fx.run());

    // Consistency: every correct party that delivered instance (3,0) got
    // the same transaction.
    std::map<std::uint64_t, Digest> value;
    for (std::uint32_t p = 0; p < 3; ++p) {
      for (auto& [sender, inst, id] : h.delivered[p]) {
        CHECK(sender == 3);
        auto [it, fresh] = value.emplace(inst, id);
        if (!fresh) CHECK(it->second == id);
      }
    }
  }
}

TEST_CASE("silent sender delivers nothing") {
  BcchHarness h(4, 1);
  CHECK(h.fx.run());
  for (std::uint32_t p = 0; p < 4; ++p) CHECK(h.delivered[p].empty());
}

TEST_CASE("echo certificate soundness") {
  BcchHarness h(4, 1);
  Transaction tx = tx_of(1, 1);
  Digest d = digest(tx.canonical_bytes());
  Bytes msg = bcch::EchoCertificate::echo_sign_bytes(2, 0, d);

  bcch::EchoCertificate cert;
  cert.sender = 2;
  cert.round = 0;
  cert.msg_digest = d;
  for (std::uint32_t p : {0u, 1u, 3u})
    cert.sigs.emplace_back(p, h.fx.keys[p].sign(SignDomain::Echo, msg));
  CHECK(cert.valid(h.fx.cfg, h.fx.kv(0), h.fx.cache));

  SUBCASE("below quorum") {
    cert.sigs.pop_back();
    CHECK_FALSE(cert.valid(h.fx.cfg, h.fx.kv(0), h.fx.cache));
  }
  SUBCASE("duplicate signer does not count twice") {
    cert.sigs.pop_back();
    cert.sigs.emplace_back(cert.sigs[0]);
    CHECK_FALSE(cert.valid(h.fx.cfg, h.fx.kv(0), h.fx.cache));
  }
  SUBCASE("signature over another digest") {
    cert.msg_digest[0] ^= 1;
    CHECK_FALSE(cert.valid(h.fx.cfg, h.fx.kv(0), h.fx.cache));
  }
  SUBCASE("accepting an external final requires a matching certificate") {
    CHECK(h.channels[0]->accept_external_final(2, 0, tx, cert));
    Transaction other = tx_of(9, 9);
    CHECK_FALSE(h.channels[0]->accept_external_final(2, 1, other, cert));
  }
}

TEST_CASE("replayed finals for a delivered instance are ignored") {
  BcchHarness h(4, 1);
  Transaction tx = tx_of(0, 0);
  CHECK(h.channels[0]->broadcast(tx));
  CHECK(h.fx.run());
  REQUIRE(h.delivered[1].size() == 1);

  const auto* stored = h.channels[1]->stored(0, 0);
  REQUIRE(stored);
  CHECK(h.channels[1]->accept_external_final(0, 0, stored->first,
                                             stored->second));
  CHECK(h.delivered[1].size() == 1);  // no duplication
  CHECK(h.channels[1]->stats().stale_finals == 1);
}

TEST_CASE("externally transferred finals follow the fifo position") {
  BcchHarness h(4, 1);
  Transaction first = tx_of(0, 0);
  Transaction second = tx_of(0, 1);
  CHECK(h.channels[2]->broadcast(first));
  CHECK(h.channels[2]->broadcast(second));
  CHECK(h.fx.run());

  const auto* s1 = h.channels[0]->stored(2, 1);
  REQUIRE(s1);
  // A fresh channel that never saw the traffic: instance 1 buffers until 0
  // arrives, then both deliver in order.
  bcch::Channel observer(h.fx.cfg, PartyId{3}, h.fx.kv(3), *h.fx.links[3],
                         h.fx.cache);
  std::vector<std::uint64_t> order;
  observer.set_deliver([&](const bcch::BcchMessage& m,
                           const bcch::EchoCertificate&) {
    order.push_back(m.round);
  });
  const auto* s0 = h.channels[0]->stored(2, 0);
  REQUIRE(s0);
  CHECK(observer.accept_external_final(2, 1, s1->first, s1->second));
  CHECK(order.empty());  // instance 1 waits for instance 0
  CHECK(observer.accept_external_final(2, 0, s0->first, s0->second));
  CHECK(order == std::vector<std::uint64_t>{0, 1});
}

TEST_CASE("prefix consistency: delivered sequences agree pairwise") {
  BcchHarness h(4, 0, 5);
  for (int k = 0; k < 8; ++k)
    CHECK(h.channels[1]->broadcast(tx_of(0, static_cast<std::uint64_t>(k))));
  CHECK(h.fx.run());
  for (std::uint32_t p = 0; p < 4; ++p)
    for (std::uint32_t q = 0; q < 4; ++q) {
      std::size_t common =
          std::min(h.delivered[p].size(), h.delivered[q].size());
      for (std::size_t i = 0; i < common; ++i)
        CHECK(h.delivered[p][i] == h.delivered[q][i]);
    }
}

TEST_CASE("channel backpressure reports a full queue") {
  BcchHarness h(4, 1);
  bool saturated = false;
  for (std::uint64_t k = 0; k < bcch::Channel::kPendingBound + 2; ++k) {
    if (!h.channels[0]->broadcast(tx_of(0, k))) {
      saturated = true;
      break;
    }
  }
  CHECK(saturated);
}
