#include "qof/transport.hpp"

namespace qof::net {

namespace {

Bytes mac_input(std::uint32_t from, std::uint32_t to, std::uint64_t seq,
                const Bytes& body) {
  ByteWriter w;
  w.u32(from);
  w.u32(to);
  w.u64(seq);
  w.bytes(body);
  return w.take();
}

}  // namespace

AuthLinks::AuthLinks(PartyId self, const KeyMaterial& keys, FrameNetwork& net)
    : self_(self),
      keys_(&keys),
      net_(&net),
      send_seq_(keys.public_keys.size(), 0),
      seen_(keys.public_keys.size()) {
  net_->register_sink(self_, [this](Bytes frame) { on_frame(frame); });
}

void AuthLinks::send(PartyId to, const Bytes& body) {
  if (to.index >= n()) throw ConfigError("al_send: unknown destination party");

  Bytes out_body = body;
  if (filter_) {
    FilterResult r = filter_(to, body);
    if (r.action == FilterAction::Drop) return;
    if (r.rewritten) out_body = std::move(r.body);
  }

  std::uint64_t seq = send_seq_[to.index]++;
  Bytes input = mac_input(self_.index, to.index, seq, out_body);
  Mac mac = compute_mac(keys_->link_send_keys[to.index], input);

  ByteWriter w;
  w.u32(self_.index);
  w.u32(to.index);
  w.u64(seq);
  w.bytes(out_body);
  w.raw(mac);
  ++stats_.sent;
  net_->send_frame(self_, to, w.take());
}

void AuthLinks::broadcast(const Bytes& body, bool include_self) {
  for (std::uint32_t j = 0; j < n(); ++j) {
    if (!include_self && j == self_.index) continue;
    send(PartyId{j}, body);
  }
}

void AuthLinks::on_frame(const Bytes& frame) {
  std::uint32_t from, to;
  std::uint64_t seq;
  Bytes body;
  Mac mac{};
  try {
    ByteReader r(frame);
    from = r.u32();
    to = r.u32();
    seq = r.u64();
    body = r.bytes();
    auto m = r.raw(kMacSize);
    std::copy(m.begin(), m.end(), mac.begin());
    r.expect_done();
  } catch (const ParseError&) {
    ++stats_.dropped_malformed;
    return;
  }

  if (from >= n() || to != self_.index) {
    ++stats_.dropped_malformed;
    return;
  }
  Bytes input = mac_input(from, to, seq, body);
  if (!verify_mac(keys_->link_recv_keys[from], input, mac)) {
    ++stats_.dropped_mac;
    return;
  }
  if (!seen_[from].insert(seq).second) {
    ++stats_.dropped_replay;
    return;
  }
  ++stats_.delivered;
  if (deliver_) deliver_(PartyId{from}, body);
}

}  // namespace qof::net
