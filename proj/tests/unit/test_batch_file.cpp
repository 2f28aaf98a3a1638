#include <doctest.h>

#include <qof/batch_file.hpp>

using namespace qof;

namespace {

std::vector<engine::DeliveredBatch> sample_log() {
  std::vector<engine::DeliveredBatch> log;
  engine::DeliveredBatch b1;
  b1.round = 2;
  b1.seq = 0;
  b1.txs = {Transaction::make(0, 3, to_bytes("d"))};
  engine::DeliveredBatch b2;
  b2.round = 2;
  b2.seq = 1;
  b2.txs = {Transaction::make(0, 0, to_bytes("a")),
            Transaction::make(0, 1, to_bytes("b")),
            Transaction::make(0, 2, to_bytes("c"))};
  log.push_back(b1);
  log.push_back(b2);
  return log;
}

}  // namespace

TEST_CASE("batch file round-trips and verifies with f+1 signatures") {
  auto keys = KeyMaterial::generate(4, 11);
  auto file = SignedBatchFile::make(4, 1, sample_log(), keys, {0, 1, 2});
  Bytes bytes = file.file_bytes();

  std::vector<PublicKey> pks = keys[0].public_keys;
  auto res = verify_batch_file(bytes, pks, 1);
  REQUIRE(res.accepted);
  // Ledger is the flattened batch order, ids sorted within a batch.
  REQUIRE(res.ledger.size() == 4);
  CHECK(res.ledger[0].payload == to_bytes("d"));

  auto parsed = SignedBatchFile::parse(bytes);
  CHECK(parsed.n == 4);
  CHECK(parsed.batches.size() == 2);
  CHECK(parsed.sigs.size() == 3);
}

TEST_CASE("sub-threshold signature sets are rejected") {
  auto keys = KeyMaterial::generate(4, 11);
  std::vector<PublicKey> pks = keys[0].public_keys;

  auto one_sig = SignedBatchFile::make(4, 1, sample_log(), keys, {2});
  auto res = verify_batch_file(one_sig.file_bytes(), pks, 1);
  CHECK_FALSE(res.accepted);
  CHECK(res.ledger.empty());  // rejected files execute nothing

  // Same signature listed twice is still one distinct signer.
  auto dup = SignedBatchFile::make(4, 1, sample_log(), keys, {2, 2});
  CHECK_FALSE(verify_batch_file(dup.file_bytes(), pks, 1).accepted);
}

TEST_CASE("any single-byte mutation invalidates the file") {
  auto keys = KeyMaterial::generate(4, 11);
  auto file = SignedBatchFile::make(4, 1, sample_log(), keys, {0, 1});
  Bytes bytes = file.file_bytes();
  std::vector<PublicKey> pks = keys[0].public_keys;
  REQUIRE(verify_batch_file(bytes, pks, 1).accepted);

  // Sampled positions here; the acceptance suite runs the exhaustive scan.
  for (std::size_t pos = 0; pos < bytes.size(); pos += 7) {
    Bytes mutated = bytes;
    mutated[pos] ^= 0x01;
    auto res = verify_batch_file(mutated, pks, 1);
    CAPTURE(pos);
    CHECK_FALSE(res.accepted);
  }
}

TEST_CASE("keys file round-trips") {
  auto keys = KeyMaterial::generate(4, 3);
  std::string text = keys_to_json(4, 1, keys[0].public_keys);
  std::uint32_t n = 0, f = 0;
  std::vector<PublicKey> pks;
  keys_from_json(text, n, f, pks);
  CHECK(n == 4);
  CHECK(f == 1);
  CHECK(pks == keys[0].public_keys);
  CHECK_THROWS_AS(keys_from_json("{}", n, f, pks), ConfigError);
}
