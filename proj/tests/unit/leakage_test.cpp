// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "fespam/leakage/experiment.hpp"

using namespace fespam;
using namespace fespam::leakage;

namespace {

// Smaller than the acceptance setup so the whole file runs in seconds.
ExperimentConfig small_config(std::uint64_t seed) {
  ExperimentConfig c;
  c.corpus.documents = 1200;
  c.adversary.epochs = 60;
  c.rounds = 3;
  return with_seed(c, seed);
}

const Experiment& small_experiment() {
  static const Experiment e = run_baseline(small_config(1));
  return e;
}

std::vector<DualExample> first(std::span<const DualExample> d, std::size_t n) {
  return {d.begin(), d.begin() + static_cast<std::ptrdiff_t>(std::min(n, d.size()))};
}

// Independent recomputation of both batch-mean losses, no gradients.
std::pair<double, double> recompute_losses(const nn::EncryptedPart& fe, const Head& pub, const Head& adv,
                                           std::span<const DualExample> batch) {
  double lp = 0, la = 0;
  for (const auto& ex : batch) {
    nn::FeCache fc;
    nn::forward_fe(fe, ex.x, fc);
    HeadCache c1, c2;
    auto zp = head_forward(pub, fc.q, c1);
    for (std::size_t o = 0; o < zp.size(); ++o) {
      double y = o == ex.pub ? 1.0 : 0.0;
      // log(1 - sigmoid(z)) = -log(1 + e^z), which avoids log(0) for confident heads.
      lp += y * std::log1p(std::exp(-zp[o])) + (1 - y) * std::log1p(std::exp(zp[o]));
    }
    auto za = head_forward(adv, fc.q, c2);
    double sum = 0;
    for (double z : za) sum += std::exp(z);
    la -= std::log(std::exp(za[ex.pri]) / sum);
  }
  return {lp / static_cast<double>(batch.size()), la / static_cast<double>(batch.size())};
}

}  // namespace

TEST(PrivateLabels, WordPresenceUsesTopInformationGainTerm) {
  auto raw = text::generate_spam_corpus({.emails = 400, .seed = 3});
  text::PrepareReport rep;
  auto corpus = text::preprocess_all(raw, rep);
  auto vocab = text::build_vocabulary(corpus);
  auto tasks = word_presence_tasks(corpus, vocab, 10);
  ASSERT_EQ(tasks.size(), 10u);
  auto order = text::rank_by_information_gain(vocab);
  for (std::size_t r = 0; r < 10; ++r) {
    EXPECT_EQ(tasks[r].designated_term, vocab.term(order[r]));
    EXPECT_EQ(tasks[r].classes, 2u);
    ASSERT_EQ(tasks[r].labels.size(), corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      bool has = std::count(corpus[i].tokens.begin(), corpus[i].tokens.end(), tasks[r].designated_term) > 0;
      EXPECT_EQ(tasks[r].labels[i], has ? 1 : 0);
    }
  }
}

TEST(PrivateLabels, KTooLarge) {
  auto raw = text::generate_spam_corpus({.emails = 100, .seed = 4});
  text::PrepareReport rep;
  auto corpus = text::preprocess_all(raw, rep);
  auto vocab = text::select_features(text::build_vocabulary(corpus), 5);
  try {
    word_presence_labels(corpus, vocab, 6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::k_too_large);
  }
}

TEST(PrivateLabels, AbsentWordIsDegenerate) {
  auto raw = text::generate_spam_corpus({.emails = 200, .seed = 5});
  text::PrepareReport rep;
  auto corpus = text::preprocess_all(raw, rep);
  auto vocab = text::build_vocabulary(corpus);
  auto top = vocab.term(text::rank_by_information_gain(vocab)[0]);
  std::vector<text::TokenizedEmail> without;
  for (auto e : corpus) {
    std::erase(e.tokens, top);
    without.push_back(e);
  }
  try {
    word_presence_labels(without, vocab, 10, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate_labels);
  }
}

TEST(MutualInformation, OracleValues) {
  std::vector<int> a{0, 0, 1, 1}, b{0, 1, 0, 1}, c{1, 1, 0, 0};
  EXPECT_NEAR(mutual_information_bits(a, b), 0.0, 1e-12);
  EXPECT_NEAR(mutual_information_bits(a, c), 1.0, 1e-12);
  EXPECT_NEAR(mutual_information_bits(a, a), 1.0, 1e-12);
}

TEST(MutualInformation, DualCorpusLabelsAreIndependent) {
  text::DualLabelConfig cfg;
  cfg.documents = 10000;
  auto dual = text::generate_dual_label_corpus(cfg);
  std::vector<int> pub;
  for (const auto& e : dual.emails) pub.push_back(static_cast<int>(e.label));
  EXPECT_LE(mutual_information_bits(pub, dual.private_labels), 0.01);
  auto l = synthetic_category_labels(dual.private_labels, dual.private_classes);
  EXPECT_EQ(l.classes, 3u);
}

TEST(Adversary, LeaksAboveMajorityAndFreezesEncryptedPart) {
  const auto& e = small_experiment();
  EXPECT_GE(e.public_accuracy, 0.95);
  EXPECT_GT(e.adversary.accuracy, e.private_majority + 0.1);
  EXPECT_EQ(e.adversary.head.in(), 20u);
}

TEST(Adversary, ShuffledLabelsStayNearChance) {
  const auto& e = small_experiment();
  double total = 0, majority = 0;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    DualSplit shuffled = e.data;
    std::vector<std::size_t> labels = private_labels(shuffled.train);
    Rng rng(s);
    rng.shuffle(labels);
    for (std::size_t i = 0; i < labels.size(); ++i) shuffled.train[i].pri = labels[i];
    auto cfg = e.config.adversary;
    cfg.seed = s;
    total += train_adversary(e.network.fe, shuffled, cfg).accuracy;
    std::vector<int> test;
    for (const auto& d : shuffled.test) test.push_back(static_cast<int>(d.pri));
    majority += majority_rate(test);
  }
  EXPECT_NEAR(total / 5, majority / 5, 0.05);
}

TEST(Collateral, LossDecomposition) {
  const auto& e = small_experiment();
  auto batch = first(e.data.train, 64);
  for (double alpha : {0.0, 0.5, 1.0, 4.0}) {
    auto l = collateral_loss(e.network.fe, e.public_head, e.adversary.head, batch, alpha, nullptr);
    auto [lp, la] = recompute_losses(e.network.fe, e.public_head, e.adversary.head, batch);
    EXPECT_NEAR(l.pub, lp, 1e-6 * std::max(1.0, std::abs(lp)));
    EXPECT_NEAR(l.pri, la, 1e-6 * std::max(1.0, std::abs(la)));
    double expected = lp - alpha * la;
    EXPECT_NEAR(l.total, expected, 1e-6 * std::max(1.0, std::abs(expected)));
  }
}

TEST(Collateral, GradientIsPublicMinusAlphaPrivate) {
  const auto& e = small_experiment();
  auto batch = first(e.data.train, 32);
  auto grad_at = [&](double alpha) {
    auto g = nn::zeros_like(e.network.fe);
    collateral_loss(e.network.fe, e.public_head, e.adversary.head, batch, alpha, &g);
    return g;
  };
  auto g0 = grad_at(0), g1 = grad_at(1), g3 = grad_at(3);
  auto b0 = nn::param_blocks(g0), b1 = nn::param_blocks(g1), b3 = nn::param_blocks(g3);
  for (std::size_t b = 0; b < b0.size(); ++b)
    for (std::size_t i = 0; i < b0[b].size(); ++i) {
      // g(alpha) = g_pub - alpha * g_pri with g_pri = g(0) - g(1).
      double expect = b0[b][i] - 3 * (b0[b][i] - b1[b][i]);
      EXPECT_NEAR(b3[b][i], expect, 1e-9 * std::max(1.0, std::abs(expect)));
    }
}

TEST(Collateral, AlphaZeroIgnoresAdversary) {
  const auto& e = small_experiment();
  auto batch = first(e.data.train, 32);
  auto other = e.adversary.head;
  for (auto& v : other.mlp.layers[0].w.flat()) v *= -3;
  auto g1 = nn::zeros_like(e.network.fe), g2 = nn::zeros_like(e.network.fe);
  collateral_loss(e.network.fe, e.public_head, e.adversary.head, batch, 0.0, &g1);
  collateral_loss(e.network.fe, e.public_head, other, batch, 0.0, &g2);
  EXPECT_EQ(g1, g2);
}

TEST(Collateral, FiniteDifferenceGradientChecks) {
  const auto& e = small_experiment();
  auto batch = first(e.data.train, 16);
  Rng rng(9);
  for (int setting = 0; setting < 3; ++setting) {
    auto fe = e.network.fe;
    for (auto& v : fe.projection.flat()) v += rng.uniform(-0.05, 0.05);
    for (auto& v : fe.quadratic.flat()) v += rng.uniform(-0.05, 0.05);
    for (double alpha : {0.5, 1.0}) {
      double err = collateral_gradient_check(fe, e.public_head, e.adversary.head, batch, alpha, 3,
                                             static_cast<std::uint64_t>(setting) + 1);
      EXPECT_LE(err, 1e-4) << "setting " << setting << " alpha " << alpha;
    }
  }
}

TEST(Collateral, HeadsStayByteIdentical) {
  const auto& e = small_experiment();
  auto pub = param_digest(e.public_head), adv = param_digest(e.adversary.head), fe = param_digest(e.network.fe);
  CollateralConfig cc;
  auto out = collateral_train(e.network.fe, e.public_head, e.adversary.head, e.data.train, cc);
  EXPECT_EQ(param_digest(e.public_head), pub);
  EXPECT_EQ(param_digest(e.adversary.head), adv);
  EXPECT_EQ(param_digest(e.network.fe), fe);
  EXPECT_NE(param_digest(out), fe);
}

TEST(Collateral, DivergenceIsReported) {
  const auto& e = small_experiment();
  CollateralConfig cc;
  cc.alpha = 4;
  cc.learning_rate = 1e200;
  cc.clip_norm = 0;
  try {
    collateral_train(e.network.fe, e.public_head, e.adversary.head, e.data.train, cc);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), Errc::divergence);
  }
}

TEST(Collateral, RejectsNegativeAlpha) {
  const auto& e = small_experiment();
  CollateralConfig cc;
  cc.alpha = -1;
  EXPECT_THROW(collateral_train(e.network.fe, e.public_head, e.adversary.head, e.data.train, cc), Error);
}

TEST(Recovery, OriginalEncryptedPartReproducesAdversary) {
  const auto& e = small_experiment();
  auto r = recovery_eval(e.network.fe, e.data, e.config.public_head, e.config.adversary);
  EXPECT_NEAR(r.adv_acc, e.adversary.accuracy, 0.02);
  EXPECT_NEAR(r.pub_acc, e.public_accuracy, 0.03);
}

TEST(Recovery, ConstantOutputGivesMajorityRates) {
  const auto& e = small_experiment();
  auto fe = nn::zeros_like(e.network.fe);
  auto r = recovery_eval(fe, e.data, e.config.public_head, e.config.adversary);
  std::vector<int> pub, pri;
  for (const auto& d : e.data.test) {
    pub.push_back(static_cast<int>(d.pub));
    pri.push_back(static_cast<int>(d.pri));
  }
  // A constant input can only yield one class; the trained bias picks the
  // training majority, which matches the test majority for these splits.
  EXPECT_NEAR(r.pub_acc, majority_rate(pub), 1e-12);
  EXPECT_NEAR(r.adv_acc, majority_rate(pri), 1e-12);
}

TEST(Sweep, DeterministicAndOrdered) {
  const auto& e = small_experiment();
  std::vector<double> alphas{0, 1};
  auto t1 = alpha_sweep(e, alphas);
  auto t2 = alpha_sweep(e, alphas);
  EXPECT_EQ(t1.rows, t2.rows);
  ASSERT_EQ(t1.rows.size(), 2u);
  EXPECT_LT(t1.rows[1].adv_acc, t1.rows[0].adv_acc);
  // The alpha = 0 row should be the public optimum; fresh recovery heads
  // add about a point of noise.
  EXPECT_GE(t1.rows[0].pub_acc, t1.rows[1].pub_acc - 0.01);
  auto table = render_sweep(t1);
  EXPECT_EQ(table.rfind("alpha\tpub_acc\tadv_acc\tseed\tepochs\n", 0), 0u);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 3);
  auto manifest = render_manifest(e.config, alphas);
  EXPECT_NE(manifest.find("alphas = 0 1"), std::string::npos);
  EXPECT_NE(manifest.find("rounds = 3"), std::string::npos);
}

TEST(Sweep, RejectsBadAlphaLists) {
  const auto& e = small_experiment();
  EXPECT_THROW(alpha_sweep(e, std::span<const double>{}), Error);
  std::vector<double> bad{0.5, -0.1};
  EXPECT_THROW(alpha_sweep(e, bad), Error);
}
