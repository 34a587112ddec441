// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstring>

#include "fespam/nn/model_file.hpp"
#include "fespam/nn/quadnet.hpp"
#include "fespam/nn/quantize.hpp"
#include "fespam/text/corpus.hpp"
#include "fespam/text/synthetic.hpp"
#include "fespam/text/vocabulary.hpp"

using namespace fespam;
using namespace fespam::nn;
using text::FeatureVector;
using text::Label;
using text::LabeledVector;

namespace {

FeatureVector fv(std::vector<std::uint32_t> c) { return {std::move(c)}; }

// Naive quadratic-form oracle: builds D_j as a dense diagonal matrix and
// evaluates (P x~)^T D_j (P x~) with plain loops.
double quadratic_form_oracle(const EncryptedPart& fe, const FeatureVector& x, std::size_t j) {
  std::vector<double> xt{1.0};
  for (auto c : x.counts) xt.push_back(c);
  std::size_t d = fe.hidden();
  std::vector<double> px(d, 0.0);
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t i = 0; i < xt.size(); ++i) px[k] += fe.projection(k, i) * xt[i];
  double acc = 0;
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) {
      double dab = a == b ? fe.quadratic(j, a) : 0.0;
      acc += px[a] * dab * px[b];
    }
  return acc;
}

// 20 docs over x in {0..4} x {0..3}; spam iff x1 >= 3.
std::vector<LabeledVector> toy_set() {
  std::vector<LabeledVector> out;
  for (std::uint32_t a = 0; a < 5; ++a)
    for (std::uint32_t b = 0; b < 4; ++b)
      out.push_back({"t" + std::to_string(a) + std::to_string(b), fv({a, b}), a >= 3 ? Label::spam : Label::ham});
  return out;
}

std::vector<LabeledVector> random_batch(std::size_t n, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LabeledVector> out;
  for (std::size_t i = 0; i < count; ++i) {
    FeatureVector x{std::vector<std::uint32_t>(n)};
    for (auto& c : x.counts) c = static_cast<std::uint32_t>(rng.below(3));
    out.push_back({"b" + std::to_string(i), x, rng.bernoulli(0.5) ? Label::spam : Label::ham});
  }
  return out;
}

std::vector<std::uint8_t> param_bytes(const QuadNetParams& p) {
  std::vector<std::uint8_t> out;
  auto add = [&](std::span<const double> s) {
    auto old = out.size();
    out.resize(old + s.size() * sizeof(double));
    std::memcpy(out.data() + old, s.data(), s.size() * sizeof(double));
  };
  add(p.fe.projection.flat());
  add(p.fe.quadratic.flat());
  for (const auto& l : p.plain.layers) {
    add(l.w.flat());
    add(l.b);
  }
  return out;
}

}  // namespace

TEST(QuadNet, ShapesFollowArchitecture) {
  auto p = init_quadnet({.n = 7}, 1);
  EXPECT_EQ(p.fe.projection.rows(), 40u);
  EXPECT_EQ(p.fe.projection.cols(), 8u);
  EXPECT_EQ(p.fe.quadratic.rows(), 20u);
  EXPECT_EQ(p.fe.quadratic.cols(), 40u);
  ASSERT_EQ(p.plain.layers.size(), 2u);
  EXPECT_EQ(p.plain.layers[0].w.rows(), 10u);
  EXPECT_EQ(p.plain.layers[0].w.cols(), 20u);
  EXPECT_EQ(p.plain.layers[1].w.rows(), 2u);
  double a = 1.0 / std::sqrt(8.0);
  for (double v : p.fe.projection.flat()) EXPECT_LE(std::abs(v), a);
}

TEST(QuadNet, ZeroProjectionLeavesOnlyPlainBiases) {
  auto p = init_quadnet({.n = 3}, 2);
  for (auto& v : p.fe.projection.flat()) v = 0;
  auto a = forward_float(p, fv({5, 0, 9}));
  auto b = forward_float(p, fv({0, 0, 0}));
  EXPECT_EQ(a.probs, b.probs);
  std::vector<double> zero(20, 0.0);
  EXPECT_EQ(predict_from_q(p.plain, zero).probs, a.probs);
}

TEST(QuadNet, IdentityProjectionExample) {
  EncryptedPart fe{Matrix(2, 2, std::vector<double>{1, 0, 0, 1}), Matrix(1, 2, std::vector<double>{1, 1})};
  FeCache c;
  forward_fe(fe, make_input(fv({3})), c);
  EXPECT_DOUBLE_EQ(c.q[0], 10.0);
}

TEST(QuadNet, MatchesQuadraticFormOracle) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto p = init_quadnet({.n = 6, .hidden = 5, .outputs = 4}, seed);
    Rng rng(seed + 100);
    FeatureVector x{std::vector<std::uint32_t>(6)};
    for (auto& v : x.counts) v = static_cast<std::uint32_t>(rng.below(10));
    FeCache c;
    forward_fe(p.fe, make_input(x), c);
    for (std::size_t j = 0; j < 4; ++j) {
      double o = quadratic_form_oracle(p.fe, x, j);
      EXPECT_NEAR(c.q[j], o, 1e-9 * std::max(1.0, std::abs(o)));
    }
  }
}

TEST(QuadNet, ProbabilitiesInOpenInterval) {
  auto p = init_quadnet({.n = 4}, 5);
  for (const auto& d : random_batch(4, 30, 8)) {
    auto pr = forward_float(p, d.x);
    for (double v : pr.probs) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  }
}

TEST(QuadNet, ShapeMismatch) {
  auto p = init_quadnet({.n = 4}, 5);
  try {
    forward_float(p, fv({1, 2}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::shape_mismatch);
  }
}

TEST(QuadNet, SymmetricHeadTiesToHam) {
  auto p = init_quadnet({.n = 2}, 3);
  auto& last = p.plain.layers.back();
  for (std::size_t c = 0; c < last.w.cols(); ++c) last.w(1, c) = last.w(0, c);
  last.b[1] = last.b[0];
  auto pr = forward_float(p, fv({1, 1}));
  EXPECT_EQ(pr.probs[0], pr.probs[1]);
  EXPECT_EQ(pr.label, Label::ham);
}

TEST(Train, ToySetIsQuadraticallySeparable) {
  auto data = toy_set();
  // Exhaustive check that the single form (x1)^2 - 6.25 separates the set.
  for (const auto& d : data) {
    double q = static_cast<double>(d.x.counts[0]) * d.x.counts[0] - 6.25;
    EXPECT_EQ(q > 0, d.label == Label::spam);
  }
  text::DatasetSplit s{data, {}, 0, 1.0};
  TrainReport rep;
  auto p = train(s, {.epochs = 200, .learning_rate = 0.05, .batch_size = 4, .seed = 7}, &rep);
  EXPECT_GE(accuracy(p, data), 0.95);
  ASSERT_EQ(rep.epoch_loss.size(), 200u);
  EXPECT_LT(rep.epoch_loss.back(), rep.epoch_loss.front());
}

TEST(Train, ZeroEpochsReturnsInitialization) {
  auto data = toy_set();
  text::DatasetSplit s{data, {}, 0, 1.0};
  auto p = train(s, {.epochs = 0, .seed = 11});
  EXPECT_EQ(p, init_quadnet({.n = 2}, 11));
}

TEST(Train, BitReproducible) {
  auto data = random_batch(8, 60, 4);
  text::DatasetSplit s{data, {}, 0, 1.0};
  TrainConfig cfg{.epochs = 5, .seed = 21};
  EXPECT_EQ(param_bytes(train(s, cfg)), param_bytes(train(s, cfg)));
  cfg.seed = 22;
  EXPECT_NE(param_bytes(train(s, cfg)), param_bytes(train(s, {.epochs = 5, .seed = 21})));
}

TEST(Train, LossDecreasesOnSyntheticCorpus) {
  auto raw = text::generate_spam_corpus({.emails = 400, .seed = 3});
  text::PrepareReport rep;
  auto corpus = text::preprocess_all(raw, rep);
  auto vocab = text::select_features(text::build_vocabulary(corpus), 30);
  std::vector<LabeledVector> data;
  for (const auto& e : corpus) data.push_back({e.id, text::vectorize(e, vocab), e.label});
  auto split = text::split(data, 0.7, 5);
  TrainReport tr;
  auto p = train(split, {.epochs = 20, .seed = 3}, &tr);
  // Non-increasing up to batch noise: compare window means.
  double head = (tr.epoch_loss[0] + tr.epoch_loss[1] + tr.epoch_loss[2]) / 3;
  double tail = (tr.epoch_loss[17] + tr.epoch_loss[18] + tr.epoch_loss[19]) / 3;
  EXPECT_LT(tail, head);
  EXPECT_GE(accuracy(p, split.test), 0.9);
}

TEST(Train, DivergenceIsReported) {
  auto data = toy_set();
  text::DatasetSplit s{data, {}, 0, 1.0};
  auto p = init_quadnet({.n = 2}, 1);
  for (auto& v : p.fe.projection.flat()) v = 1e200;
  auto ex = make_examples(data);
  try {
    fit(p, ex, {.epochs = 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::divergence);
    EXPECT_NE(std::string(e.what()).find("epoch 0"), std::string::npos);
  }
  EXPECT_THROW(train({}, {}), Error);
}

TEST(GradientCheck, RandomSmallNets) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto p = init_quadnet({.n = 5, .hidden = 6, .outputs = 4, .plain_hidden = 3}, seed);
    auto batch = random_batch(5, 4, seed * 31);
    EXPECT_LE(gradient_check(p, batch), 1e-4) << "seed " << seed;
  }
}

TEST(GradientCheck, FullArchitecture) {
  auto p = init_quadnet({.n = 12}, 9);
  EXPECT_LE(gradient_check(p, random_batch(12, 3, 77)), 1e-4);
}

TEST(GradientCheck, SaturatedBatchHasTinyGradients) {
  auto p = init_quadnet({.n = 2, .hidden = 2, .outputs = 2, .plain_hidden = 2}, 4);
  for (auto& l : p.plain.layers)
    for (auto& v : l.w.flat()) v = 0;
  p.plain.layers.back().b = {40.0, -40.0};  // outputs are one-hot ham to 1e-17
  std::vector<LabeledVector> batch{{"z", fv({1, 2}), Label::ham}};
  auto ex = make_examples(batch);
  auto gfe = zeros_like(p.fe);
  auto gplain = zeros_like(p.plain);
  double loss = batch_loss(p, ex, &gfe, &gplain);
  EXPECT_LT(loss, 1e-15);
  for (auto b : param_blocks(gplain))
    for (double g : b) EXPECT_LT(std::abs(g), 1e-15);
  for (auto b : param_blocks(gfe))
    for (double g : b) EXPECT_EQ(g, 0.0);
}

TEST(GradientCheck, SingleParameterHandDerivative) {
  // n=1, one hidden unit, one output: q = w2 * (p0 + p1 x)^2, then a
  // 1-1-2 head. dL/dp1 = dL/dq * w2 * 2 h * x.
  auto p = init_quadnet({.n = 1, .hidden = 1, .outputs = 1, .plain_hidden = 1}, 12);
  p.fe.projection(0, 0) = 0.0;
  p.fe.projection(0, 1) = 0.5;
  p.fe.quadratic(0, 0) = 1.0;
  auto& l0 = p.plain.layers[0];
  l0.w(0, 0) = 1.0;
  l0.b[0] = 0.0;
  auto& l1 = p.plain.layers[1];
  l1.w(0, 0) = 1.0;
  l1.w(1, 0) = -1.0;
  l1.b = {0.0, 0.0};
  std::vector<LabeledVector> batch{{"s", fv({2}), Label::spam}};
  // h = 1, q = 1, r = 1, logits (1, -1), target index 1.
  // dL/dz0 = sigmoid(1), dL/dz1 = sigmoid(-1) - 1; dL/dr = dz0 - dz1.
  double dz0 = sigmoid(1.0), dz1 = sigmoid(-1.0) - 1.0;
  double dq = dz0 - dz1;
  double expected = dq * 1.0 * 2.0 * 1.0 * 2.0;
  auto ex = make_examples(batch);
  auto gfe = zeros_like(p.fe);
  auto gplain = zeros_like(p.plain);
  batch_loss(p, ex, &gfe, &gplain);
  EXPECT_NEAR(gfe.projection(0, 1), expected, 1e-12);
  EXPECT_LE(gradient_check(p, batch), 1e-4);
}

TEST(ModelFile, RoundTrip) {
  ModelBundle m{init_quadnet({.n = 9}, 4), std::nullopt, 4, "abc123", "counts"};
  m.quantized = quantize(m.params, 8);
  auto text = serialize_model(m);
  auto back = parse_model(text);
  EXPECT_EQ(back, m);
  EXPECT_EQ(serialize_model(back), text);
  m.quantized.reset();
  EXPECT_EQ(parse_model(serialize_model(m)), m);
}

TEST(ModelFile, RejectsCorruption) {
  ModelBundle m{init_quadnet({.n = 3}, 4), std::nullopt, 4, "", "counts"};
  auto text = serialize_model(m);
  EXPECT_THROW(parse_model(text.substr(0, text.size() / 2)), Error);
  EXPECT_THROW(parse_model("format_version: 9\n" + text), Error);
  EXPECT_THROW(parse_model(""), Error);
  Rng rng(5);
  for (int i = 0; i < 300; ++i) {
    auto bad = text;
    bad[rng.below(bad.size())] = static_cast<char>(rng.below(256));
    try {
      parse_model(bad);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::parse_error) << e.what();
    }
  }
}
