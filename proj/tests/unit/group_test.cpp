// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "fespam/fe/curve.hpp"

using namespace fespam;
using namespace fespam::fe;

TEST(Fr, FieldIdentities) {
  auto rs = RandomSource::seeded(1);
  for (int i = 0; i < 20; ++i) {
    Fr a = Fr::random(rs), b = Fr::random(rs);
    EXPECT_EQ(a + b - b, a);
    EXPECT_EQ(a * a.inverse(), Fr::from_u64(1));
    EXPECT_EQ(Fr::from_bytes(a.to_bytes()), a);
    EXPECT_EQ(a * (b + Fr::from_u64(1)), a * b + a);
  }
  EXPECT_EQ(Fr::from_i64(-3) + Fr::from_u64(3), Fr{});
  EXPECT_TRUE(Fr{}.is_zero());
  EXPECT_THROW(Fr{}.inverse(), Error);
  std::array<std::uint8_t, 32> big;
  big.fill(0xff);
  EXPECT_THROW(Fr::from_bytes(big), Error);
}

TEST(G1G2, LinearityAndEncoding) {
  auto rs = RandomSource::seeded(2);
  Fr a = Fr::random(rs), b = Fr::random(rs);
  G1 g1 = G1::generator();
  G2 g2 = G2::generator();
  EXPECT_EQ(g1 * (a + b), g1 * a + g1 * b);
  EXPECT_EQ(g2 * (a + b), g2 * a + g2 * b);
  EXPECT_EQ(g1.times(100), g1 * Fr::from_u64(100));
  EXPECT_EQ(g2.times(77), g2 * Fr::from_u64(77));
  EXPECT_TRUE(g1.times(0).is_identity());
  EXPECT_TRUE((g1 + (-g1)).is_identity());
  auto p = g1 * a;
  EXPECT_EQ(G1::decompress(p.compress()), p);
  auto q = g2 * b;
  EXPECT_EQ(G2::decompress(q.compress()), q);
  EXPECT_EQ(G1::decompress(G1::identity().compress()), G1::identity());
}

TEST(G1G2, RejectsInvalidEncodings) {
  std::array<std::uint8_t, 48> junk{};
  junk[0] = 0x80;  // compressed flag, x = 0: not on the curve
  try {
    G1::decompress(junk);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_group_element);
  }
  std::array<std::uint8_t, 47> short_buf{};
  EXPECT_THROW(G1::decompress(short_buf), Error);
  Rng rng(3);
  int rejected = 0;
  for (int i = 0; i < 200; ++i) {
    std::array<std::uint8_t, 96> r;
    for (auto& v : r) v = static_cast<std::uint8_t>(rng.below(256));
    try {
      G2::decompress(r);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::invalid_group_element);
      ++rejected;
    }
  }
  EXPECT_EQ(rejected, 200);
}

TEST(Gt, Bilinear) {
  const Gt& gt = Gt::generator();
  EXPECT_FALSE(gt == Gt::identity());
  for (std::int64_t a : {1, 2, 7, -5})
    for (std::int64_t b : {3, -4, 11}) {
      auto lhs = pairing(G1::generator() * Fr::from_i64(a), G2::generator() * Fr::from_i64(b));
      EXPECT_EQ(lhs, gt.pow(a * b));
    }
  EXPECT_EQ(pairing(G1::identity(), G2::generator()), Gt::identity());
}

TEST(Gt, PowAndInverse) {
  const Gt& g = Gt::generator();
  EXPECT_EQ(g.pow(std::uint64_t{0}), Gt::identity());
  EXPECT_EQ(g.pow(std::int64_t{5}) * g.pow(std::int64_t{-5}), Gt::identity());
  EXPECT_EQ(g.pow(std::uint64_t{12}), g.pow(std::uint64_t{5}) * g.pow(std::uint64_t{7}));
  EXPECT_EQ(g.sqr(), g * g);
  EXPECT_EQ(g.inverse().inverse(), g);
}

TEST(Gt, FingerprintAndEncoding) {
  const Gt& g = Gt::generator();
  auto a = g.pow(std::uint64_t{1000});
  Gt b = Gt::identity();
  for (int i = 0; i < 1000; ++i) b = b * g;
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  EXPECT_NE(a.fingerprint(), (a * g).fingerprint());
  auto enc = a.encode();
  EXPECT_EQ(enc.size(), Gt::kEncodedSize);
  EXPECT_EQ(Gt::decode(enc), a);
  EXPECT_EQ(Gt::decode(enc).encode(), enc);
  auto bad = enc;
  bad[300] ^= 1;
  EXPECT_THROW(Gt::decode(bad), Error);
  Bytes overflow(Gt::kEncodedSize, 0xff);
  EXPECT_THROW(Gt::decode(overflow), Error);
}

TEST(Oracle, GroupLaws) {
  const auto& g = OracleElem::generator();
  EXPECT_EQ(g.pow(std::int64_t{3}) * g.pow(std::int64_t{4}), g.pow(std::int64_t{7}));
  EXPECT_EQ(g.pow(std::int64_t{-9}) * g.pow(std::int64_t{9}), OracleElem::identity());
  EXPECT_EQ(g.pow(OracleElem::kModulus), OracleElem::identity());
  EXPECT_EQ(OracleElem::decode(g.encode()), g);
  Bytes big{0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff};
  EXPECT_THROW(OracleElem::decode(big), Error);
}
