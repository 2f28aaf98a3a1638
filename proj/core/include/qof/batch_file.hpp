#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qof/crypto.hpp"
#include "qof/engine.hpp"
#include "qof/types.hpp"

namespace qof {

/// Ordered list of delivered batches plus per-party signatures over its
/// canonical serialization. Acceptance needs at least f+1 distinct valid
/// signatures, so at least one correct party attests to the order.
struct SignedBatchFile {
  std::uint32_t n = 0;
  std::uint32_t f = 0;
  std::vector<engine::DeliveredBatch> batches;
  std::vector<std::pair<std::uint32_t, Signature>> sigs;

  Bytes payload_bytes() const;
  Bytes file_bytes() const;
  static SignedBatchFile parse(const Bytes& file);

  /// Builds the file from a delivered log, signed by the given parties.
  static SignedBatchFile make(std::uint32_t n, std::uint32_t f,
                              const std::vector<engine::DeliveredBatch>& log,
                              const std::vector<KeyMaterial>& keys,
                              const std::vector<std::uint32_t>& signers);
};

struct VerifyBatchResult {
  bool accepted = false;
  std::string reason;
  std::vector<Transaction> ledger;  // executed order when accepted
};

/// Pure function of the file bytes and the public keys: parses, checks the
/// signature threshold over the exact payload serialization, and on accept
/// replays the batches into a flat ledger. Rejects execute nothing.
VerifyBatchResult verify_batch_file(const Bytes& file,
                                    const std::vector<PublicKey>& public_keys,
                                    std::uint32_t f);

/// Public-key file (JSON: n, f, hex keys) so verification can run apart
/// from the simulation that produced the batches.
std::string keys_to_json(std::uint32_t n, std::uint32_t f,
                         const std::vector<PublicKey>& public_keys);
void keys_from_json(const std::string& text, std::uint32_t& n,
                    std::uint32_t& f, std::vector<PublicKey>& public_keys);

}  // namespace qof
