// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>

#include "fespam/fe/scheme.hpp"

using namespace fespam;
using namespace fespam::fe;
using nn::IntMatrix;
using nn::QuantizedEncryptedPart;

namespace {

QuantizedEncryptedPart random_form(std::size_t n, std::size_t d, std::size_t t, int qmax, Rng& rng) {
  QuantizedEncryptedPart qp{IntMatrix(d, n + 1), IntMatrix(t, d), 0.01, 0.02, qmax == 7 ? 4 : 8};
  for (auto& v : qp.projection.flat()) v = static_cast<std::int32_t>(rng.between(-qmax, qmax));
  for (auto& v : qp.quadratic.flat()) v = static_cast<std::int32_t>(rng.between(-qmax, qmax));
  return qp;
}

std::vector<std::uint32_t> random_x(std::size_t n, std::uint32_t x_max, Rng& rng) {
  std::vector<std::uint32_t> x(n);
  for (auto& v : x) v = static_cast<std::uint32_t>(rng.below(x_max + 1));
  return x;
}

std::vector<std::int64_t> oracle(const QuantizedEncryptedPart& qp, const std::vector<std::uint32_t>& x) {
  return nn::forward_encryptedpart_int(std::span<const std::uint32_t>(x), qp);
}

class Backends : public ::testing::TestWithParam<Backend> {};
INSTANTIATE_TEST_SUITE_P(Fe, Backends, ::testing::Values(Backend::pairing, Backend::oracle),
                         [](const auto& info) { return to_string(info.param); });

}  // namespace

TEST_P(Backends, SetupIsDeterministicUnderSeed) {
  auto a = setup(4, {.backend = GetParam()}, 7);
  auto b = setup(4, {.backend = GetParam()}, 7);
  auto c = setup(4, {.backend = GetParam()}, 8);
  EXPECT_EQ(a.mpk.serialize(), b.mpk.serialize());
  EXPECT_EQ(a.msk.serialize(), b.msk.serialize());
  EXPECT_NE(a.mpk.serialize(), c.mpk.serialize());
  EXPECT_NE(setup(4, {.backend = GetParam()}).mpk.serialize(), setup(4, {.backend = GetParam()}).mpk.serialize());
}

TEST(Setup, Errors) {
  try {
    setup(0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_argument);
  }
  try {
    setup(3, {.curve = "bn254"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::unsupported_curve);
  }
}

TEST(Setup, DefaultScaleDimension) {
  auto k = setup(5000, {}, 1);
  EXPECT_EQ(k.mpk.dim, 5001u);
  EXPECT_EQ(k.mpk.s.size(), 5001u);
}

TEST_P(Backends, EncryptionIsProbabilistic) {
  Rng rng(1);
  auto keys = setup(6, {.backend = GetParam(), .x_max = 10}, 3);
  auto qp = random_form(6, 5, 3, 7, rng);
  auto dk = derive_keys(keys.msk, qp);
  auto x = random_x(6, 10, rng);
  for (int i = 0; i < 100; ++i) {
    auto c1 = encrypt(keys.mpk, x);
    auto c2 = encrypt(keys.mpk, x);
    ASSERT_NE(c1.serialize(), c2.serialize());
    if (i < 3) {
      EXPECT_EQ(decrypt_all(qp, c1, dk), decrypt_all(qp, c2, dk));
      EXPECT_EQ(decrypt_all(qp, c1, dk), oracle(qp, x));
    }
  }
}

TEST_P(Backends, RejectsOutOfRangeEntries) {
  auto keys = setup(3, {.backend = GetParam()}, 3);
  std::vector<std::uint32_t> x{0, 101, 2};
  try {
    encrypt(keys.mpk, x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::out_of_range_entry);
  }
  std::vector<std::uint32_t> ok{0, 100, 2};
  EXPECT_NO_THROW(encrypt(keys.mpk, ok));
  std::vector<std::uint32_t> wrong_len{1, 2};
  EXPECT_THROW(encrypt(keys.mpk, wrong_len), Error);
}

TEST(Bound, ExamplesFromTheFormula) {
  QuantizedEncryptedPart zero{IntMatrix(3, 4, 5), IntMatrix(2, 3, 0), 1, 1, 8};
  EXPECT_EQ(certified_bound(zero, 0, 100), 0u);
  // P = I(2x2) over x~ = (1, x), W2 row (1, 1), x_max = 3: 1 + 9.
  QuantizedEncryptedPart id{IntMatrix(2, 2, std::vector<std::int32_t>{1, 0, 0, 1}), IntMatrix(1, 2, 1), 1, 1, 8};
  EXPECT_EQ(certified_bound(id, 0, 3), 10u);
}

TEST(Bound, SoundAgainstCornerSearchAndRandomInputs) {
  Rng rng(5);
  const std::uint32_t x_max = 10;
  for (int model = 0; model < 3; ++model) {
    auto qp = random_form(50, 40, 20, 7, rng);
    for (std::size_t j = 0; j < 20; ++j) {
      auto b = certified_bound(qp, j, x_max);
      // Corner-point search: each |h_k| is maximised at a vertex of the box.
      std::int64_t best = 0;
      for (int s = 0; s < 200; ++s) {
        std::vector<std::uint32_t> x(50);
        if (s < 40) {
          // aim at hidden unit s: push every coordinate towards the sign of P[s,i]
          auto row = qp.projection.row(static_cast<std::size_t>(s));
          for (std::size_t i = 0; i < 50; ++i) x[i] = (row[i + 1] > 0) == (row[0] >= 0) ? x_max : 0;
        } else {
          for (auto& v : x) v = rng.bernoulli(0.5) ? x_max : 0;
        }
        best = std::max(best, std::abs(oracle(qp, x)[j]));
      }
      EXPECT_GE(static_cast<std::int64_t>(b), best);
    }
    for (int s = 0; s < 10000; ++s) {
      auto x = random_x(50, x_max, rng);
      auto q = oracle(qp, x);
      for (std::size_t j = 0; j < 20; ++j)
        ASSERT_LE(static_cast<std::uint64_t>(std::abs(q[j])), certified_bound(qp, j, x_max));
    }
  }
}

TEST(Bound, OverflowAgainstCapacity) {
  Rng rng(2);
  auto qp = random_form(30, 40, 20, 127, rng);
  auto keys = setup(30, {.backend = Backend::oracle, .x_max = 100}, 1);
  try {
    derive_keys(keys.msk, qp);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::bound_overflow);
  }
  EXPECT_NO_THROW(derive_keys(keys.msk, qp, {.dlog_capacity = std::uint64_t{1} << 59}));
}

TEST_P(Backends, DecryptEvalEncodesTheForm) {
  Rng rng(3);
  auto keys = setup(8, {.backend = GetParam(), .x_max = 10}, 4);
  auto qp = random_form(8, 6, 4, 7, rng);
  auto dk = derive_keys(keys.msk, qp);
  auto x = random_x(8, 10, rng);
  auto ct = encrypt(keys.mpk, x);
  auto want = oracle(qp, x);
  for (std::size_t j = 0; j < 4; ++j) {
    auto elem = decrypt_eval(qp, ct, dk[j]);
    if (GetParam() == Backend::pairing) EXPECT_EQ(std::get<Gt>(elem), Gt::generator().pow(want[j]));
    else EXPECT_EQ(std::get<OracleElem>(elem), OracleElem::generator().pow(want[j]));
    EXPECT_EQ(dlog_recover(elem, dk[j].bound), want[j]);
  }
  // A single key derived on its own agrees with the batch.
  EXPECT_EQ(derive_key(keys.msk, qp, 2), dk[2]);
}

TEST_P(Backends, ZeroFormGivesIdentity) {
  Rng rng(4);
  auto keys = setup(5, {.backend = GetParam()}, 4);
  auto qp = random_form(5, 4, 3, 7, rng);
  for (std::size_t k = 0; k < 4; ++k) qp.quadratic(1, k) = 0;
  auto dk = derive_keys(keys.msk, qp);
  EXPECT_EQ(dk[1].bound, 0u);
  auto ct = encrypt(keys.mpk, random_x(5, 100, rng));
  auto e = decrypt_eval(qp, ct, dk[1]);
  if (GetParam() == Backend::pairing) EXPECT_EQ(std::get<Gt>(e), Gt::identity());
  else EXPECT_EQ(std::get<OracleElem>(e), OracleElem::identity());

  QuantizedEncryptedPart all_zero{IntMatrix(4, 6), IntMatrix(3, 4), 1, 1, 4};
  auto zk = derive_keys(keys.msk, all_zero);
  EXPECT_EQ(decrypt_all(all_zero, encrypt(keys.mpk, random_x(5, 100, rng)), zk), std::vector<std::int64_t>(3, 0));
}

TEST_P(Backends, DecryptAllMatchesPlaintextOracle) {
  Rng rng(GetParam() == Backend::pairing ? 10 : 11);
  int pairs = GetParam() == Backend::pairing ? 8 : 100;
  for (int p = 0; p < pairs; ++p) {
    std::size_t n = 1 + rng.below(50);
    std::uint32_t x_max = static_cast<std::uint32_t>(1 + rng.below(10));
    auto keys = setup(n, {.backend = GetParam(), .x_max = x_max});
    auto qp = random_form(n, 40, 20, 7, rng);
    auto dk = derive_keys(keys.msk, qp);
    auto x = random_x(n, x_max, rng);
    DecryptReport rep;
    EXPECT_EQ(decrypt_all(qp, encrypt(keys.mpk, x), dk, {}, &rep), oracle(qp, x)) << "pair " << p;
    EXPECT_GT(rep.evaluation_seconds, 0);
    EXPECT_GT(rep.giant_steps, 0u);
  }
}

TEST_P(Backends, MismatchesAreDetected) {
  Rng rng(6);
  auto k1 = setup(4, {.backend = GetParam()}, 1);
  auto k2 = setup(4, {.backend = GetParam()}, 2);
  auto qp = random_form(4, 3, 2, 7, rng);
  auto other = random_form(4, 3, 2, 7, rng);
  auto ct = encrypt(k1.mpk, random_x(4, 5, rng));
  auto dk2 = derive_keys(k2.msk, qp);
  try {
    decrypt_all(qp, ct, dk2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::key_ciphertext_mismatch);
  }
  auto dk1 = derive_keys(k1.msk, qp);
  try {
    decrypt_all(other, ct, dk1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::digest_mismatch);
  }
  std::vector<FunctionalKey> swapped{dk1[1], dk1[0]};
  EXPECT_THROW(decrypt_all(qp, ct, swapped), Error);
  EXPECT_THROW(decrypt_all(qp, ct, std::span(dk1).first(1)), Error);
}

TEST(Backends, MixingBackendsIsAnError) {
  Rng rng(7);
  auto pk = setup(3, {.backend = Backend::pairing}, 1);
  auto ok = setup(3, {.backend = Backend::oracle}, 1);
  auto qp = random_form(3, 2, 2, 7, rng);
  auto ct = encrypt(pk.mpk, random_x(3, 5, rng));
  try {
    decrypt_all(qp, ct, derive_keys(ok.msk, qp));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::key_ciphertext_mismatch);
  }
}

TEST_P(Backends, UsesSharedDlogTable) {
  Rng rng(8);
  auto keys = setup(10, {.backend = GetParam(), .x_max = 5}, 1);
  auto qp = random_form(10, 40, 20, 7, rng);
  auto dk = derive_keys(keys.msk, qp);
  auto gt_table = DlogTable<Gt>::build(Gt::generator(), GetParam() == Backend::pairing ? 1 << 14 : 0);
  auto or_table = DlogTable<OracleElem>::build(OracleElem::generator(), 1 << 14);
  DlogTables tables{&gt_table, &or_table};
  auto x = random_x(10, 5, rng);
  DecryptReport rep;
  EXPECT_EQ(decrypt_all(qp, encrypt(keys.mpk, x), dk, tables, &rep), oracle(qp, x));
  EXPECT_EQ(rep.baby_steps, 0u);
}

TEST_P(Backends, SerializationRoundTrips) {
  Rng rng(9);
  auto keys = setup(7, {.backend = GetParam(), .x_max = 20}, 5);
  auto qp = random_form(7, 5, 3, 7, rng);
  auto dk = derive_keys(keys.msk, qp);
  auto x = random_x(7, 20, rng);
  auto ct = encrypt(keys.mpk, x);

  auto ct_bytes = ct.serialize();
  EXPECT_EQ(std::string(ct_bytes.begin(), ct_bytes.begin() + 4), "QFE1");
  EXPECT_EQ(Ciphertext::parse(ct_bytes).serialize(), ct_bytes);
  auto k_bytes = dk[0].serialize();
  EXPECT_EQ(std::string(k_bytes.begin(), k_bytes.begin() + 4), "QFK1");
  EXPECT_EQ(FunctionalKey::parse(k_bytes).serialize(), k_bytes);
  EXPECT_EQ(PublicKey::parse(keys.mpk.serialize()).serialize(), keys.mpk.serialize());
  EXPECT_EQ(MasterSecretKey::parse(keys.msk.serialize()).serialize(), keys.msk.serialize());

  std::vector<FunctionalKey> reloaded;
  for (const auto& k : dk) reloaded.push_back(FunctionalKey::parse(k.serialize()));
  EXPECT_EQ(decrypt_all(qp, Ciphertext::parse(ct_bytes), reloaded), oracle(qp, x));
}

TEST(Serialization, SecretScalarsNeverLeaveTheMasterKey) {
  Rng rng(10);
  auto keys = setup(4, {.backend = Backend::pairing}, 5);
  auto qp = random_form(4, 3, 2, 7, rng);
  auto blobs = std::vector<Bytes>{encrypt(keys.mpk, random_x(4, 3, rng)).serialize(), derive_keys(keys.msk, qp)[0].serialize(),
                                  keys.mpk.serialize()};
  for (const auto& s : keys.msk.s) {
    auto b = s.to_bytes();
    for (const auto& blob : blobs) EXPECT_EQ(std::search(blob.begin(), blob.end(), b.begin(), b.end()), blob.end());
  }
}

TEST_P(Backends, CorruptedFilesGiveStructuredErrors) {
  Rng rng(11);
  auto keys = setup(3, {.backend = GetParam(), .x_max = 5}, 5);
  auto qp = random_form(3, 4, 2, 7, rng);
  auto dk = derive_keys(keys.msk, qp);
  auto x = random_x(3, 5, rng);
  std::vector<Bytes> files{encrypt(keys.mpk, x).serialize(), dk[0].serialize(), keys.mpk.serialize(), keys.msk.serialize()};
  for (int i = 0; i < 400; ++i) {
    auto which = rng.below(files.size());
    auto bad = files[which];
    auto mode = rng.below(3);
    if (mode == 0) bad[rng.below(bad.size())] ^= static_cast<std::uint8_t>(1 + rng.below(255));
    else if (mode == 1) bad.resize(rng.below(bad.size()));
    else bad.insert(bad.begin() + static_cast<std::ptrdiff_t>(rng.below(bad.size())), static_cast<std::uint8_t>(rng.below(256)));
    try {
      switch (which) {
        case 0: {
          auto ct = Ciphertext::parse(bad);
          auto out = decrypt_all(qp, ct, dk);  // may succeed on a benign flip, or fail cleanly
          (void)out;
          break;
        }
        case 1: FunctionalKey::parse(bad); break;
        case 2: PublicKey::parse(bad); break;
        default: MasterSecretKey::parse(bad); break;
      }
    } catch (const Error&) {
      // structured error: fine
    }
  }
}
