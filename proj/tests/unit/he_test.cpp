// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "fespam/he/bench.hpp"
#include "fespam/he/lr.hpp"
#include "fespam/he/paillier.hpp"
#include "fespam/text/corpus.hpp"
#include "fespam/text/synthetic.hpp"

using namespace fespam;
using namespace fespam::he;

namespace {

const PaillierKeys& test_keys() {
  static const PaillierKeys k = [] {
    auto rs = RandomSource::seeded(99);
    return paillier_keygen(kTestKeyBits, rs);
  }();
  return k;
}

mpz_class dec_signed(const mpz_class& c) { return to_signed(test_keys().pub, paillier_decrypt(test_keys(), c)); }

struct Prepared {
  std::vector<text::TokenizedEmail> corpus;
  text::Vocabulary vocab;
};

const Prepared& spam_corpus() {
  static const Prepared p = [] {
    auto raw = text::generate_spam_corpus({.emails = 1500, .seed = 21});
    text::PrepareReport rep;
    Prepared out;
    out.corpus = text::preprocess_all(raw, rep);
    out.vocab = text::build_vocabulary(out.corpus);
    return out;
  }();
  return p;
}

text::DatasetSplit spam_split(std::size_t n, std::uint64_t seed) {
  auto features = text::select_features(spam_corpus().vocab, n);
  auto data = vectorize_all(spam_corpus().corpus, features, text::TermWeighting::counts);
  return text::split(data, 0.7, seed);
}

}  // namespace

TEST(Paillier, KeySizeAndDecryptRoundTrip) {
  const auto& k = test_keys();
  EXPECT_EQ(k.pub.bits, kTestKeyBits);
  auto rs = RandomSource::seeded(1);
  for (long m : {0L, 1L, 42L, -1L, -123456789L}) EXPECT_EQ(dec_signed(paillier_encrypt(k.pub, m, rs)), m);
  mpz_class big = k.pub.n - 5;
  EXPECT_EQ(paillier_decrypt(k, paillier_encrypt(k.pub, big, rs)), big);
  // m is taken mod N.
  EXPECT_EQ(paillier_decrypt(k, paillier_encrypt(k.pub, k.pub.n + 7, rs)), 7);
}

TEST(Paillier, PrimitiveExamples) {
  const auto& pk = test_keys().pub;
  auto rs = RandomSource::seeded(2);
  EXPECT_EQ(dec_signed(paillier_add(pk, paillier_encrypt(pk, 2, rs), paillier_encrypt(pk, 3, rs))), 5);
  EXPECT_EQ(dec_signed(paillier_scale(pk, paillier_encrypt(pk, 2, rs), 4)), 8);
}

TEST(Paillier, HomomorphismExhaustive) {
  const auto& pk = test_keys().pub;
  auto rs = RandomSource::seeded(3);
  std::vector<mpz_class> enc;
  for (int a = -50; a <= 50; ++a) enc.push_back(paillier_encrypt(pk, a, rs));
  auto at = [&](int v) -> const mpz_class& { return enc[static_cast<std::size_t>(v + 50)]; };
  int bad = 0;
  for (int a = -50; a <= 50; ++a)
    for (int b = -50; b <= 50; ++b) {
      bad += dec_signed(paillier_add(pk, at(a), at(b))) != a + b;
      // b doubles as the scalar k.
      bad += dec_signed(paillier_scale(pk, at(a), b)) != a * b;
    }
  EXPECT_EQ(bad, 0);
}

TEST(Paillier, EncryptionIsProbabilistic) {
  const auto& pk = test_keys().pub;
  auto rs = RandomSource::seeded(4);
  for (int m : {0, 1, 77}) EXPECT_NE(paillier_encrypt(pk, m, rs), paillier_encrypt(pk, m, rs));
}

TEST(Paillier, RejectsInvalidCiphertexts) {
  const auto& k = test_keys();
  auto expect_code = [&](const mpz_class& c) {
    try {
      paillier_decrypt(k, c);
      ADD_FAILURE() << "accepted";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::invalid_ciphertext);
    }
  };
  expect_code(0);
  expect_code(k.pub.n2);
  expect_code(k.pub.n);  // shares a factor with N
}

TEST(Paillier, KeySerialization) {
  const auto& k = test_keys();
  auto pub = serialize_public(k.pub);
  EXPECT_EQ(parse_public(pub), k.pub);
  EXPECT_EQ(serialize_public(parse_public(pub)), pub);
  auto sec = serialize_keys(k);
  auto k2 = parse_keys(sec);
  EXPECT_EQ(serialize_keys(k2), sec);
  auto bad = sec;
  bad.back() ^= 1;
  EXPECT_THROW(parse_keys(bad), Error);
}

TEST(FixedPoint, ForcedEncodings) {
  const auto& pk = test_keys().pub;
  EXPECT_EQ(encode_fixed(1.0, 16, pk), 65536);
  EXPECT_EQ(encode_fixed(0.0, 16, pk), 0);
  EXPECT_EQ(encode_fixed(-1.0, 16, pk), pk.n - 65536);
  EXPECT_THROW(encode_fixed(std::numeric_limits<double>::infinity(), 16, pk), Error);
  EXPECT_THROW(encode_fixed(1e80, 16, pk), Error);
}

TEST(EncryptModel, RoundTripWithinOneUlp) {
  const auto& k = test_keys();
  Rng rng(5);
  auto rs = RandomSource::seeded(5);
  LRWeights w;
  for (int i = 0; i < 200; ++i) w.w.push_back(rng.uniform(-8, 8));
  w.b = -0.3;
  for (unsigned s : {16u, 24u}) {
    auto em = encrypt_model(k.pub, w, s, rs);
    const double ulp = std::ldexp(1.0, -static_cast<int>(s));
    for (std::size_t i = 0; i < w.n(); ++i)
      EXPECT_LE(std::abs(decode_fixed(paillier_decrypt(k, em.w[i]), s, k.pub) - w.w[i]), ulp);
    EXPECT_LE(std::abs(decode_fixed(paillier_decrypt(k, em.b), s, k.pub) - w.b), ulp);
  }
  EXPECT_THROW(encrypt_model(k.pub, w, 15, rs), Error);
}

TEST(EncryptModel, ZeroWeightsDecryptToZero) {
  auto rs = RandomSource::seeded(6);
  auto em = encrypt_model(test_keys().pub, LRWeights{std::vector<double>(5, 0.0), 0.0}, 16, rs);
  for (const auto& c : em.w) EXPECT_EQ(paillier_decrypt(test_keys(), c), 0);
}

TEST(ClientScore, MatchesPlaintextDotProduct) {
  const auto& k = test_keys();
  Rng rng(7);
  auto rs = RandomSource::seeded(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.below(60);
    LRWeights w;
    for (std::size_t i = 0; i < n; ++i) w.w.push_back(rng.uniform(-3, 3));
    w.b = rng.uniform(-3, 3);
    std::vector<std::uint32_t> x(n);
    for (auto& v : x) v = static_cast<std::uint32_t>(rng.below(4));
    // Counts above 1 scale the per-weight rounding error, hence the max.
    double mass = 1;
    for (auto v : x) mass += v;
    auto em = encrypt_model(k.pub, w, 16, rs);
    auto p = owner_decrypt_and_predict(k, client_score(em, x), 16);
    double tol = std::ldexp(1.0, -16) * std::max<double>(static_cast<double>(n + 1), mass);
    EXPECT_NEAR(p.score, lr_score(w, x), tol);
  }
}

TEST(ClientScore, ZeroInputGivesBiasAlone) {
  auto rs = RandomSource::seeded(8);
  LRWeights w{{1.5, -2.0, 0.25}, 0.75};
  auto em = encrypt_model(test_keys().pub, w, 16, rs);
  std::vector<std::uint32_t> x(3, 0);
  auto c = client_score(em, x);
  EXPECT_EQ(paillier_decrypt(test_keys(), c), encode_fixed(0.75, 16, test_keys().pub));
}

TEST(ClientScore, DimensionMismatch) {
  auto rs = RandomSource::seeded(9);
  auto em = encrypt_model(test_keys().pub, LRWeights{{1.0, 2.0}, 0}, 16, rs);
  std::vector<std::uint32_t> x(3, 1);
  try {
    client_score(em, x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::dimension_mismatch);
  }
}

TEST(OwnerPredict, TieGoesToHamAndLargeScoreToSpam) {
  const auto& k = test_keys();
  auto rs = RandomSource::seeded(10);
  auto p0 = owner_decrypt_and_predict(k, paillier_encrypt(k.pub, 0, rs), 16);
  EXPECT_EQ(p0.label, text::Label::ham);
  EXPECT_DOUBLE_EQ(p0.probability, 0.5);
  auto p1 = owner_decrypt_and_predict(k, paillier_encrypt(k.pub, encode_fixed(40.0, 16, k.pub), rs), 16);
  EXPECT_EQ(p1.label, text::Label::spam);
  auto p2 = owner_decrypt_and_predict(k, paillier_encrypt(k.pub, encode_fixed(-40.0, 16, k.pub), rs), 16);
  EXPECT_EQ(p2.label, text::Label::ham);
}

TEST(TrainLr, ZeroEpochsGiveZeroWeights) {
  auto sp = spam_split(20, 1);
  auto m = train_lr(sp, {.epochs = 0});
  EXPECT_EQ(m, (LRWeights{std::vector<double>(20, 0.0), 0.0}));
}

TEST(TrainLr, SeparableToySet) {
  // Label is spam iff feature 0 exceeds feature 1.
  text::DatasetSplit sp;
  Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    std::uint32_t a = static_cast<std::uint32_t>(rng.below(6)), b = static_cast<std::uint32_t>(rng.below(6));
    if (a == b) continue;
    sp.train.push_back({std::to_string(i), {{a, b, static_cast<std::uint32_t>(rng.below(3))}},
                        a > b ? text::Label::spam : text::Label::ham});
  }
  auto m = train_lr(sp, {.epochs = 60, .learning_rate = 0.2});
  EXPECT_GE(lr_accuracy(m, sp.train), 0.95);
}

TEST(TrainLr, DeterministicUnderSeed) {
  auto sp = spam_split(30, 2);
  EXPECT_EQ(train_lr(sp, {.epochs = 3, .seed = 4}), train_lr(sp, {.epochs = 3, .seed = 4}));
  EXPECT_NE(train_lr(sp, {.epochs = 3, .seed = 4}), train_lr(sp, {.epochs = 3, .seed = 5}));
}

TEST(TrainLr, DivergenceIsReported) {
  auto sp = spam_split(30, 3);
  try {
    train_lr(sp, {.epochs = 50, .learning_rate = 1e300, .l2 = 1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::divergence);
  }
}

TEST(TrainLr, EmptyTrainSplitRejected) { EXPECT_THROW(train_lr(text::DatasetSplit{}), Error); }

TEST(EndToEnd, HomomorphicLabelsMatchPlaintext) {
  const auto& k = test_keys();
  auto sp = spam_split(100, 4);
  auto m = train_lr(sp);
  EXPECT_GE(lr_accuracy(m, sp.test), 0.9);
  auto rs = RandomSource::seeded(12);
  auto em = encrypt_model(k.pub, m, 16, rs);
  std::vector<text::LabeledVector> all = sp.test;
  all.insert(all.end(), sp.train.begin(), sp.train.end());
  ASSERT_GE(all.size(), 1000u);
  all.resize(1000);
  std::size_t mismatches = 0, flagged = 0;
  for (const auto& d : all) {
    auto p = owner_decrypt_and_predict(k, client_score(em, d.x.counts), 16);
    if (near_decision_boundary(m, d.x.counts, 16)) ++flagged;
    else mismatches += p.label != lr_predict(m, d.x);
  }
  EXPECT_EQ(mismatches, 0u);
  EXPECT_EQ(flagged, 0u);
}

TEST(ModelFile, RoundTripAndCorruption) {
  auto rs = RandomSource::seeded(13);
  LRWeights w{{0.5, -1.25, 3.0, 0.0}, -0.5};
  auto em = encrypt_model(test_keys().pub, w, 20, rs);
  auto bytes = serialize_encrypted_model(em);
  auto back = parse_encrypted_model(bytes);
  EXPECT_EQ(back.scale_bits, 20u);
  EXPECT_EQ(back.w, em.w);
  EXPECT_EQ(back.b, em.b);
  EXPECT_EQ(serialize_encrypted_model(back), bytes);

  auto lr = serialize_lr(w);
  EXPECT_EQ(parse_lr(lr), w);

  Rng rng(14);
  for (int i = 0; i < 300; ++i) {
    auto bad = bytes;
    switch (rng.below(3)) {
      case 0: bad[rng.below(bad.size())] ^= static_cast<std::uint8_t>(1 + rng.below(255)); break;
      case 1: bad.resize(rng.below(bad.size())); break;
      default: bad.push_back(static_cast<std::uint8_t>(rng.below(256)));
    }
    try {
      parse_encrypted_model(bad);
    } catch (const Error&) {
    }
  }
}

TEST(Bench, EmptySizesGiveEmptyReport) {
  EXPECT_TRUE(bench_roundtrip(spam_corpus().corpus, spam_corpus().vocab, std::span<const std::size_t>{}).rows.empty());
}

TEST(Bench, RowsPerSizeWithZeroNetwork) {
  std::vector<std::size_t> sizes{20, 40};
  auto r = bench_roundtrip(spam_corpus().corpus, spam_corpus().vocab, sizes,
                           {.key_bits = kTestKeyBits, .lr = {}, .emails_per_size = 5});
  ASSERT_EQ(r.rows.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(r.rows[i].n, sizes[i]);
    EXPECT_EQ(r.rows[i].network_seconds, 0.0);
    EXPECT_EQ(r.rows[i].mismatches, 0u);
    EXPECT_EQ(r.rows[i].emails, 5u);
    EXPECT_GT(r.rows[i].encrypt_seconds, 0.0);
  }
}
