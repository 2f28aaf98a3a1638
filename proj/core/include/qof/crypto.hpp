#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "qof/bytes.hpp"

namespace qof {

inline constexpr std::size_t kDigestSize = 32;
inline constexpr std::size_t kSignatureSize = 64;
inline constexpr std::size_t kPublicKeySize = 32;
inline constexpr std::size_t kSecretKeySize = 64;
inline constexpr std::size_t kMacSize = 32;
inline constexpr std::size_t kLinkKeySize = 32;

using Digest = std::array<std::uint8_t, kDigestSize>;
using Signature = std::array<std::uint8_t, kSignatureSize>;
using PublicKey = std::array<std::uint8_t, kPublicKeySize>;
using SecretKey = std::array<std::uint8_t, kSecretKeySize>;
using Mac = std::array<std::uint8_t, kMacSize>;
using LinkKey = std::array<std::uint8_t, kLinkKeySize>;

/// Domain tags mixed into every signed byte string, so a signature produced
/// for one message kind can never be replayed as another.
enum class SignDomain : std::uint8_t {
  Echo = 1,
  Status = 2,
  Block = 3,
  Batch = 4,
};

/// Collision-resistant digest (BLAKE2b-256).
Digest digest(std::span<const std::uint8_t> data);
Digest digest(const Bytes& data);

std::string to_hex(const Digest& d);
std::string short_hex(const Digest& d);  // first 8 hex chars, for traces

/// Signing interface. The default backend is Ed25519 with deterministic
/// verification; parties only ever hold their own secret key.
class Signer {
 public:
  virtual ~Signer() = default;
  virtual Signature sign(SignDomain domain,
                         std::span<const std::uint8_t> message) const = 0;
};

bool verify_signature(const PublicKey& pk, SignDomain domain,
                      std::span<const std::uint8_t> message,
                      const Signature& sig);

Mac compute_mac(const LinkKey& key, std::span<const std::uint8_t> data);
bool verify_mac(const LinkKey& key, std::span<const std::uint8_t> data,
                const Mac& mac);

/// All key material for one party: its signing key, everyone's public keys,
/// and one shared secret per directed link. Generated deterministically from
/// a master seed so simulation runs are reproducible.
struct KeyMaterial {
  std::uint32_t party = 0;
  SecretKey secret{};
  std::vector<PublicKey> public_keys;       // indexed by party
  std::vector<LinkKey> link_send_keys;      // key for link (party -> j)
  std::vector<LinkKey> link_recv_keys;      // key for link (j -> party)

  Signature sign(SignDomain domain, std::span<const std::uint8_t> msg) const;

  static std::vector<KeyMaterial> generate(std::uint32_t n,
                                           std::uint64_t master_seed);
};

/// Read-only view shared by all protocol components of one party.
struct KeyView {
  const KeyMaterial* keys = nullptr;

  const PublicKey& public_key(std::uint32_t party) const {
    return keys->public_keys.at(party);
  }
  Signature sign(SignDomain d, std::span<const std::uint8_t> m) const {
    return keys->sign(d, m);
  }
  std::uint32_t n() const {
    return static_cast<std::uint32_t>(keys->public_keys.size());
  }
};

/// Memoizes signature verification within one execution. Certificates are
/// re-checked at every receiving party; the result of a pure (key, domain,
/// message, signature) check never changes, so the repeat checks hit cache.
class VerifyCache {
 public:
  bool verify(const PublicKey& pk, SignDomain domain,
              std::span<const std::uint8_t> message, const Signature& sig);

  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }

 private:
  std::map<Digest, bool> cache_;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

}  // namespace qof
