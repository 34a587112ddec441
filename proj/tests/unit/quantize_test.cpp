// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "fespam/nn/quantize.hpp"
#include "fespam/text/corpus.hpp"
#include "fespam/text/synthetic.hpp"
#include "fespam/text/vocabulary.hpp"

using namespace fespam;
using namespace fespam::nn;
using text::FeatureVector;

namespace {

// Triple loop over (j, k, i) with no sharing; int64 is wide enough for
// the small test magnitudes.
std::vector<std::int64_t> naive_int(const QuantizedEncryptedPart& qp, const std::vector<std::uint32_t>& x) {
  std::vector<std::int64_t> out(qp.outputs(), 0);
  for (std::size_t j = 0; j < qp.outputs(); ++j)
    for (std::size_t k = 0; k < qp.hidden(); ++k) {
      std::int64_t h = qp.projection(k, 0);
      for (std::size_t i = 0; i < x.size(); ++i) h += static_cast<std::int64_t>(qp.projection(k, i + 1)) * x[i];
      out[j] += qp.quadratic(j, k) * h * h;
    }
  return out;
}

}  // namespace

TEST(Quantize, ForcedByRoundingRule) {
  Matrix w(1, 2, std::vector<double>{0.5, -1.0});
  auto q = quantize_matrix(w, 8);
  EXPECT_DOUBLE_EQ(q.scale, 1.0 / 127);
  EXPECT_EQ(q.values(0, 0), 64);
  EXPECT_EQ(q.values(0, 1), -127);
}

TEST(Quantize, HalvesRoundAwayFromZero) {
  // max 7 at 4 bits gives scale 1, so 2.5 -> 3 and -2.5 -> -3.
  Matrix w(1, 3, std::vector<double>{2.5, -2.5, 7.0});
  auto q = quantize_matrix(w, 4);
  EXPECT_EQ(q.values(0, 0), 3);
  EXPECT_EQ(q.values(0, 1), -3);
  EXPECT_EQ(q.values(0, 2), 7);
}

TEST(Quantize, AllZeroMatrix) {
  auto q = quantize_matrix(Matrix(3, 4), 8);
  EXPECT_EQ(q.scale, 1.0);
  for (auto v : q.values.flat()) EXPECT_EQ(v, 0);
}

TEST(Quantize, BitWidthValidated) {
  EXPECT_THROW(quantize_matrix(Matrix(1, 1, 1.0), 6), Error);
}

TEST(Quantize, ErrorWithinHalfScale) {
  Rng rng(8);
  for (int bits : {4, 8})
    for (int trial = 0; trial < 50; ++trial) {
      Matrix w(7, 9);
      double range = rng.uniform(0.01, 10);
      for (auto& v : w.flat()) v = rng.uniform(-range, range);
      auto q = quantize_matrix(w, bits);
      auto back = dequantize(q);
      int qmax = (1 << (bits - 1)) - 1;
      for (std::size_t i = 0; i < w.size(); ++i) {
        EXPECT_LE(std::abs(q.values.flat()[i]), qmax);
        // Direct recomputation of the reconstruction.
        double recon = static_cast<double>(q.values.flat()[i]) * q.scale;
        EXPECT_EQ(back.flat()[i], recon);
        EXPECT_LE(std::abs(w.flat()[i] - recon), q.scale / 2 * (1 + 1e-12));
      }
    }
}

TEST(Quantize, OnlyEncryptedPartIsQuantized) {
  auto p = init_quadnet({.n = 4}, 2);
  auto qp = quantize(p, 4);
  EXPECT_EQ(qp.bit_width, 4);
  EXPECT_EQ(qp.projection.rows(), 40u);
  EXPECT_EQ(qp.projection.cols(), 5u);
  EXPECT_EQ(qp.quadratic.rows(), 20u);
  for (auto v : qp.projection.flat()) EXPECT_LE(std::abs(v), 7);
}

TEST(IntForward, ZeroInputUsesBiasColumn) {
  auto qp = quantize(init_quadnet({.n = 5}, 3), 8);
  auto q = forward_encryptedpart_int(FeatureVector{std::vector<std::uint32_t>(5, 0)}, qp);
  ASSERT_EQ(q.size(), 20u);
  for (std::size_t j = 0; j < 20; ++j) {
    std::int64_t expect = 0;
    for (std::size_t k = 0; k < 40; ++k)
      expect += static_cast<std::int64_t>(qp.quadratic(j, k)) * qp.projection(k, 0) * qp.projection(k, 0);
    EXPECT_EQ(q[j], expect);
  }
}

TEST(IntForward, ExhaustiveSmallGridMatchesNaive) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto qp = quantize(init_quadnet({.n = 2}, seed), 8);
    for (std::uint32_t a = 0; a < 3; ++a)
      for (std::uint32_t b = 0; b < 3; ++b) {
        std::vector<std::uint32_t> x{a, b};
        auto got = forward_encryptedpart_int(std::span<const std::uint32_t>(x), qp);
        EXPECT_EQ(got, naive_int(qp, x));
        EXPECT_EQ(got, forward_encryptedpart_int(std::span<const std::uint32_t>(x), qp));
      }
  }
}

TEST(IntForward, AgreesWithDequantizedFloatForms) {
  auto p = init_quadnet({.n = 6}, 12);
  auto qp = quantize(p, 8);
  EncryptedPart deq{dequantize({qp.projection, qp.scale_projection}), dequantize({qp.quadratic, qp.scale_quadratic})};
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    FeatureVector x{std::vector<std::uint32_t>(6)};
    for (auto& v : x.counts) v = static_cast<std::uint32_t>(rng.below(20));
    auto qi = dequantize_outputs(forward_encryptedpart_int(x, qp), qp);
    FeCache c;
    forward_fe(deq, make_input(x), c);
    for (std::size_t j = 0; j < qi.size(); ++j) EXPECT_NEAR(qi[j], c.q[j], 1e-9 * std::max(1.0, std::abs(c.q[j])));
  }
}

TEST(IntForward, AdversarialMaxMagnitudeFitsStaticBound) {
  // n = 5000, every count 100, every 8-bit weight at +-127. The worst
  // output is 40 * 127 * (127 * 500001)^2 ~ 2^65.2, past int64, so the
  // guard must fire. With one hidden unit active it must fit exactly.
  const std::size_t n = 5000;
  QuantizedEncryptedPart qp{IntMatrix(40, n + 1, 127), IntMatrix(20, 40, 127), 1.0, 1.0, 8};
  std::vector<std::uint32_t> x(n, 100);
  try {
    forward_encryptedpart_int(std::span<const std::uint32_t>(x), qp);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::overflow);
  }
  QuantizedEncryptedPart one{IntMatrix(40, n + 1, 0), IntMatrix(20, 40, 0), 1.0, 1.0, 8};
  for (std::size_t i = 0; i <= n; ++i) one.projection(0, i) = -127;
  for (std::size_t j = 0; j < 20; ++j) one.quadratic(j, 0) = -127;
  auto q = forward_encryptedpart_int(std::span<const std::uint32_t>(x), one);
  const std::int64_t h = 127LL * (1 + 100LL * static_cast<std::int64_t>(n));
  for (auto v : q) EXPECT_EQ(v, -127 * h * h);
}

TEST(Predict, ZeroIntermediateUsesBiasesOnly) {
  auto p = init_quadnet({.n = 3}, 2);
  auto qp = quantize(p, 8);
  std::vector<std::int64_t> zero(20, 0);
  std::vector<double> zf(20, 0.0);
  EXPECT_EQ(predict_from_intermediate(zero, qp, p.plain).probs, predict_from_q(p.plain, zf).probs);
  std::vector<std::int64_t> short_vec(19, 0);
  EXPECT_THROW(predict_from_intermediate(short_vec, qp, p.plain), Error);
}

TEST(Predict, QuantizedAgreesWithFloatOnHeldOut) {
  auto raw = text::generate_spam_corpus({.emails = 600, .seed = 6});
  text::PrepareReport rep;
  auto corpus = text::preprocess_all(raw, rep);
  auto vocab = text::select_features(text::build_vocabulary(corpus), 40);
  std::vector<text::LabeledVector> data;
  for (const auto& e : corpus) data.push_back({e.id, text::vectorize(e, vocab), e.label});
  auto split = text::split(data, 0.7, 6);
  auto p = train(split, {.epochs = 15, .seed = 6});
  auto qp = quantize(p, 8);
  std::size_t agree = 0;
  for (const auto& d : split.test)
    agree += predict_from_intermediate(forward_encryptedpart_int(d.x, qp), qp, p.plain).label == forward_float(p, d.x).label;
  EXPECT_GE(static_cast<double>(agree) / static_cast<double>(split.test.size()), 0.98);
}

TEST(Predict, RefitOnQuantizedOutputsKeepsShape) {
  auto raw = text::generate_spam_corpus({.emails = 300, .seed = 2});
  text::PrepareReport rep;
  auto corpus = text::preprocess_all(raw, rep);
  auto vocab = text::select_features(text::build_vocabulary(corpus), 20);
  std::vector<text::LabeledVector> data;
  for (const auto& e : corpus) data.push_back({e.id, text::vectorize(e, vocab), e.label});
  auto split = text::split(data, 0.7, 2);
  auto p = train(split, {.epochs = 5, .seed = 2});
  auto qp = quantize(p, 4);
  auto refit = refit_plain_on_quantized(p.plain, qp, split.train, {.epochs = 5, .seed = 2});
  EXPECT_EQ(refit.in(), 20u);
  EXPECT_EQ(refit.out(), 2u);
  std::size_t ok = 0;
  for (const auto& d : split.test) ok += predict_from_intermediate(forward_encryptedpart_int(d.x, qp), qp, refit).label == d.label;
  EXPECT_GE(static_cast<double>(ok) / static_cast<double>(split.test.size()), 0.85);
}

TEST(FormDigest, SensitiveToWeightsNotScales) {
  auto qp = quantize(init_quadnet({.n = 3}, 2), 8);
  auto d = form_digest(qp);
  auto scaled = qp;
  scaled.scale_projection *= 2;
  EXPECT_EQ(form_digest(scaled), d);
  auto changed = qp;
  changed.quadratic(0, 0) += 1;
  EXPECT_NE(form_digest(changed), d);
}
