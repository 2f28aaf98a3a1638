#include "qof/crypto.hpp"

#include <sodium.h>

#include <mutex>

#include "qof/errors.hpp"
#include "qof/rng.hpp"

namespace qof {

namespace {

void ensure_sodium() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw ConfigError("libsodium failed to initialize");
  });
}

Bytes with_domain(SignDomain domain, std::span<const std::uint8_t> message) {
  Bytes buf;
  buf.reserve(message.size() + 1);
  buf.push_back(static_cast<std::uint8_t>(domain));
  buf.insert(buf.end(), message.begin(), message.end());
  return buf;
}

}  // namespace

Digest digest(std::span<const std::uint8_t> data) {
  ensure_sodium();
  Digest out{};
  crypto_generichash(out.data(), out.size(), data.data(), data.size(), nullptr,
                     0);
  return out;
}

Digest digest(const Bytes& data) {
  return digest(std::span<const std::uint8_t>(data));
}

std::string to_hex(const Digest& d) { return hex_encode(d); }

std::string short_hex(const Digest& d) {
  return hex_encode(d).substr(0, 8);
}

Signature KeyMaterial::sign(SignDomain domain,
                            std::span<const std::uint8_t> msg) const {
  ensure_sodium();
  Bytes m = with_domain(domain, msg);
  Signature sig{};
  crypto_sign_detached(sig.data(), nullptr, m.data(), m.size(), secret.data());
  return sig;
}

bool verify_signature(const PublicKey& pk, SignDomain domain,
                      std::span<const std::uint8_t> message,
                      const Signature& sig) {
  ensure_sodium();
  Bytes m = with_domain(domain, message);
  return crypto_sign_verify_detached(sig.data(), m.data(), m.size(),
                                     pk.data()) == 0;
}

Mac compute_mac(const LinkKey& key, std::span<const std::uint8_t> data) {
  ensure_sodium();
  Mac mac{};
  crypto_auth_hmacsha256(mac.data(), data.data(), data.size(), key.data());
  return mac;
}

bool verify_mac(const LinkKey& key, std::span<const std::uint8_t> data,
                const Mac& mac) {
  ensure_sodium();
  return crypto_auth_hmacsha256_verify(mac.data(), data.data(), data.size(),
                                       key.data()) == 0;
}

std::vector<KeyMaterial> KeyMaterial::generate(std::uint32_t n,
                                               std::uint64_t master_seed) {
  ensure_sodium();
  auto sub = [&](std::string_view label, std::uint64_t a, std::uint64_t b) {
    ByteWriter w;
    w.u64(master_seed);
    w.str(label);
    w.u64(a);
    w.u64(b);
    return digest(w.data());
  };

  std::vector<PublicKey> pks(n);
  std::vector<SecretKey> sks(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    Digest seed = sub("sign-seed", i, 0);
    static_assert(kDigestSize == crypto_sign_SEEDBYTES);
    crypto_sign_seed_keypair(pks[i].data(), sks[i].data(), seed.data());
  }

  std::vector<KeyMaterial> out(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    out[i].party = i;
    out[i].secret = sks[i];
    out[i].public_keys = pks;
    out[i].link_send_keys.resize(n);
    out[i].link_recv_keys.resize(n);
    for (std::uint32_t j = 0; j < n; ++j) {
      Digest send = sub("link-key", i, j);  // direction i -> j
      Digest recv = sub("link-key", j, i);  // direction j -> i
      std::copy(send.begin(), send.end(), out[i].link_send_keys[j].begin());
      std::copy(recv.begin(), recv.end(), out[i].link_recv_keys[j].begin());
    }
  }
  return out;
}

bool VerifyCache::verify(const PublicKey& pk, SignDomain domain,
                         std::span<const std::uint8_t> message,
                         const Signature& sig) {
  ByteWriter w;
  w.raw(pk);
  w.u8(static_cast<std::uint8_t>(domain));
  w.bytes(message);
  w.raw(sig);
  Digest key = digest(w.data());
  auto it = cache_.find(key);
  if (it != cache_.end()) {
    ++hits_;
    return it->second;
  }
  ++misses_;
  bool ok = verify_signature(pk, domain, message, sig);
  cache_.emplace(key, ok);
  return ok;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::uint64_t index) {
  ByteWriter w;
  w.u64(master);
  w.str(label);
  w.u64(index);
  Digest d = digest(w.data());
  std::uint64_t out = 0;
  for (int i = 0; i < 8; ++i) out = (out << 8) | d[static_cast<std::size_t>(i)];
  return out;
}

std::string hex_encode(std::span<const std::uint8_t> data) {
  static const char* kHex = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (std::uint8_t b : data) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

Bytes hex_decode(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw ParseError("invalid hex digit");
  };
  if (hex.size() % 2 != 0) throw ParseError("odd-length hex string");
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    out.push_back(static_cast<std::uint8_t>((nibble(hex[i]) << 4) |
                                            nibble(hex[i + 1])));
  }
  return out;
}

}  // namespace qof
