#include "qof/batch_file.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

namespace qof {

namespace {
constexpr std::string_view kMagic = "QOFB";
constexpr std::uint8_t kVersion = 1;
}  // namespace

Bytes SignedBatchFile::payload_bytes() const {
  ByteWriter w;
  w.raw(to_bytes(kMagic));
  w.u8(kVersion);
  w.u32(n);
  w.u32(f);
  w.u32(static_cast<std::uint32_t>(batches.size()));
  for (const auto& b : batches) {
    w.u64(b.round);
    w.u32(b.seq);
    w.u32(static_cast<std::uint32_t>(b.txs.size()));
    for (const auto& tx : b.txs) tx.serialize(w);
  }
  return w.take();
}

Bytes SignedBatchFile::file_bytes() const {
  Bytes out = payload_bytes();
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(sigs.size()));
  for (const auto& [party, sig] : sigs) {
    w.u32(party);
    w.raw(sig);
  }
  const Bytes& tail = w.data();
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

SignedBatchFile SignedBatchFile::parse(const Bytes& file) {
  ByteReader r(file);
  auto magic = r.raw(kMagic.size());
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin()))
    throw ParseError("not a batch file");
  if (r.u8() != kVersion) throw ParseError("unsupported batch file version");

  SignedBatchFile out;
  out.n = r.u32();
  out.f = r.u32();
  if (out.n == 0 || out.n > 4096) throw ParseError("implausible party count");
  std::uint32_t nbatches = r.u32();
  if (nbatches > 1u << 20) throw ParseError("implausible batch count");
  for (std::uint32_t i = 0; i < nbatches; ++i) {
    engine::DeliveredBatch b;
    b.round = r.u64();
    b.seq = r.u32();
    std::uint32_t ntx = r.u32();
    if (ntx > 1u << 20) throw ParseError("implausible batch size");
    for (std::uint32_t k = 0; k < ntx; ++k) b.txs.push_back(Transaction::parse(r));
    out.batches.push_back(std::move(b));
  }
  std::uint32_t nsigs = r.u32();
  if (nsigs > out.n) throw ParseError("more signatures than parties");
  for (std::uint32_t i = 0; i < nsigs; ++i) {
    std::uint32_t party = r.u32();
    Signature sig{};
    auto s = r.raw(kSignatureSize);
    std::copy(s.begin(), s.end(), sig.begin());
    out.sigs.emplace_back(party, sig);
  }
  r.expect_done();
  return out;
}

SignedBatchFile SignedBatchFile::make(
    std::uint32_t n, std::uint32_t f,
    const std::vector<engine::DeliveredBatch>& log,
    const std::vector<KeyMaterial>& keys,
    const std::vector<std::uint32_t>& signers) {
  SignedBatchFile out;
  out.n = n;
  out.f = f;
  out.batches = log;
  for (auto& b : out.batches)
    std::sort(b.txs.begin(), b.txs.end(),
              [](const Transaction& a, const Transaction& c) {
                return a.id < c.id;
              });
  Bytes payload = out.payload_bytes();
  for (std::uint32_t party : signers)
    out.sigs.emplace_back(party,
                          keys.at(party).sign(SignDomain::Batch, payload));
  return out;
}

VerifyBatchResult verify_batch_file(const Bytes& file,
                                    const std::vector<PublicKey>& public_keys,
                                    std::uint32_t f) {
  VerifyBatchResult result;
  SignedBatchFile parsed;
  try {
    parsed = SignedBatchFile::parse(file);
  } catch (const ParseError& e) {
    result.reason = std::string("malformed file: ") + e.what();
    return result;
  }
  if (parsed.n != public_keys.size()) {
    result.reason = "party count does not match key set";
    return result;
  }

  Bytes payload = parsed.payload_bytes();
  std::set<std::uint32_t> valid_signers;
  for (const auto& [party, sig] : parsed.sigs) {
    if (party >= public_keys.size()) continue;
    if (verify_signature(public_keys[party], SignDomain::Batch, payload, sig))
      valid_signers.insert(party);
  }
  if (valid_signers.size() < f + 1) {
    result.reason = "needs at least f+1 valid signatures, got " +
                    std::to_string(valid_signers.size());
    return result;
  }

  result.accepted = true;
  for (const auto& b : parsed.batches)
    for (const auto& tx : b.txs) result.ledger.push_back(tx);
  return result;
}

std::string keys_to_json(std::uint32_t n, std::uint32_t f,
                         const std::vector<PublicKey>& public_keys) {
  nlohmann::json j;
  j["n"] = n;
  j["f"] = f;
  std::vector<std::string> keys;
  for (const auto& pk : public_keys)
    keys.push_back(hex_encode(std::span<const std::uint8_t>(pk)));
  j["public_keys"] = keys;
  return j.dump(2);
}

void keys_from_json(const std::string& text, std::uint32_t& n,
                    std::uint32_t& f, std::vector<PublicKey>& public_keys) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    n = j.at("n").get<std::uint32_t>();
    f = j.at("f").get<std::uint32_t>();
    public_keys.clear();
    for (const auto& k : j.at("public_keys")) {
      Bytes raw = hex_decode(k.get<std::string>());
      if (raw.size() != kPublicKeySize) throw ParseError("bad key length");
      PublicKey pk{};
      std::copy(raw.begin(), raw.end(), pk.begin());
      public_keys.push_back(pk);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("keys file error: ") + e.what());
  }
  if (public_keys.size() != n) throw ConfigError("keys file: n mismatch");
}

}  // namespace qof
