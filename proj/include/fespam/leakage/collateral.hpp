// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Collateral learning: retrain the encrypted part on L_pub - alpha * L_pri
// against frozen public and adversary heads, then measure what fresh heads
// can still recover from the new representation.

#include <cmath>
#include <span>
#include <sstream>
#include <vector>

#include "fespam/common/random.hpp"
#include "fespam/leakage/heads.hpp"

namespace fespam::leakage {

struct CollateralConfig {
  double alpha = 1.0;
  // The -alpha * L_pri term is unbounded below: long or fast runs blow up
  // the intermediate outputs instead of removing the private signal.
  std::size_t epochs = 1;
  double learning_rate = 2e-4;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
};

struct CollateralLoss {
  double total = 0;  // pub - alpha * pri
  double pub = 0;
  double pri = 0;
};

// Batch means of both cross-entropies; when grad is non-null, adds
// d(total)/d(theta_FE). Heads receive no gradient.
inline CollateralLoss collateral_loss(const nn::EncryptedPart& fe, const Head& pub_head, const Head& adv_head,
                                      std::span<const DualExample> batch, double alpha, nn::EncryptedPart* grad) {
  require(!batch.empty(), Errc::invalid_argument, "empty batch");
  CollateralLoss out;
  const double inv = 1.0 / static_cast<double>(batch.size());
  nn::FeCache fc;
  HeadCache pc, ac;
  std::vector<double> dpub(pub_head.classes()), dpri(adv_head.classes()), dq(fe.outputs());
  for (const auto& ex : batch) {
    nn::forward_fe(fe, ex.x, fc);
    for (double q : fc.q)
      if (!std::isfinite(q)) return {NAN, NAN, NAN};
    out.pub += nn::apply_loss(pub_head.loss, head_forward(pub_head, fc.q, pc), ex.pub, dpub) * inv;
    out.pri += nn::apply_loss(adv_head.loss, head_forward(adv_head, fc.q, ac), ex.pri, dpri) * inv;
    if (!grad) continue;
    for (auto& d : dpub) d *= inv;
    for (auto& d : dpri) d *= -alpha * inv;
    auto gq_pub = head_backward(pub_head, pc, dpub, nullptr);
    auto gq_pri = head_backward(adv_head, ac, dpri, nullptr);
    for (std::size_t j = 0; j < dq.size(); ++j) dq[j] = gq_pub[j] + gq_pri[j];
    nn::backward_fe(fe, ex.x, fc, dq, *grad);
  }
  out.total = out.pub - alpha * out.pri;
  return out;
}

struct CollateralReport {
  std::vector<CollateralLoss> epochs;  // mean over batches, before each epoch's updates finish
};

inline nn::EncryptedPart collateral_train(const nn::EncryptedPart& fe, const Head& frozen_pub, const Head& frozen_adv,
                                          std::span<const DualExample> train, const CollateralConfig& cfg,
                                          CollateralReport* report = nullptr) {
  require(cfg.alpha >= 0 && std::isfinite(cfg.alpha), Errc::invalid_argument, "alpha must be a non-negative number");
  require(cfg.learning_rate > 0 && cfg.batch_size > 0, Errc::invalid_argument, "invalid collateral config");
  require(!train.empty(), Errc::invalid_argument, "training set is empty");
  const auto pub_before = param_digest(frozen_pub);
  const auto adv_before = param_digest(frozen_adv);

  nn::EncryptedPart work = fe;
  Rng rng(cfg.seed ^ 0xc011a7e3a1ULL);
  nn::MomentumSgd opt(cfg.learning_rate, cfg.momentum);
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<DualExample> batch;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    CollateralLoss sum;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i) batch.push_back(train[order[i]]);
      auto grad = nn::zeros_like(work);
      auto l = collateral_loss(work, frozen_pub, frozen_adv, batch, cfg.alpha, &grad);
      auto g = nn::param_blocks(grad);
      double norm = nn::clip_global_norm(g, cfg.clip_norm);
      if (!std::isfinite(l.total) || !std::isfinite(norm)) {
        std::ostringstream msg;
        msg << "collateral loss became non-finite at epoch " << epoch << " (alpha " << cfg.alpha << ")";
        fail(Errc::divergence, msg.str());
      }
      opt.step(nn::param_blocks(work), g);
      sum.total += l.total;
      sum.pub += l.pub;
      sum.pri += l.pri;
      ++batches;
    }
    if (report) {
      double b = static_cast<double>(batches);
      report->epochs.push_back({sum.total / b, sum.pub / b, sum.pri / b});
    }
  }
  require_unchanged(pub_before, param_digest(frozen_pub), "public head");
  require_unchanged(adv_before, param_digest(frozen_adv), "adversary head");
  return work;
}

// Max relative error between the analytic theta_FE gradient of the
// combined loss and central differences at `coords` random coordinates.
inline double collateral_gradient_check(const nn::EncryptedPart& fe, const Head& pub_head, const Head& adv_head,
                                        std::span<const DualExample> batch, double alpha, std::size_t coords,
                                        std::uint64_t seed, double eps = 1e-5, double floor = 1e-6) {
  nn::EncryptedPart work = fe;
  auto grad = nn::zeros_like(work);
  collateral_loss(work, pub_head, adv_head, batch, alpha, &grad);
  auto p = nn::param_blocks(work);
  auto g = nn::param_blocks(grad);
  Rng rng(seed);
  double worst = 0;
  for (std::size_t c = 0; c < coords; ++c) {
    std::size_t b = rng.below(p.size());
    std::size_t i = rng.below(p[b].size());
    double saved = p[b][i];
    p[b][i] = saved + eps;
    double up = collateral_loss(work, pub_head, adv_head, batch, alpha, nullptr).total;
    p[b][i] = saved - eps;
    double down = collateral_loss(work, pub_head, adv_head, batch, alpha, nullptr).total;
    p[b][i] = saved;
    double numeric = (up - down) / (2 * eps);
    double denom = std::max({std::abs(g[b][i]), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(g[b][i] - numeric) / denom);
  }
  return worst;
}

struct RecoveryResult {
  double pub_acc = 0;
  double adv_acc = 0;
};

// Fresh public and adversary heads trained from scratch on the frozen
// representation; both accuracies are held-out.
inline RecoveryResult recovery_eval(const nn::EncryptedPart& new_fe, const DualSplit& data, const HeadConfig& pub_cfg,
                                    const HeadConfig& adv_cfg) {
  const auto before = param_digest(new_fe);
  auto train_out = fe_outputs(new_fe, data.train);
  auto test_out = fe_outputs(new_fe, data.test);
  auto pub = train_head(train_out, public_labels(data.train), 2, nn::LossKind::sigmoid_bce, pub_cfg);
  auto adv = train_head(train_out, private_labels(data.train), data.private_classes, nn::LossKind::softmax_ce, adv_cfg);
  RecoveryResult r{head_accuracy(pub, test_out, public_labels(data.test)),
                   head_accuracy(adv, test_out, private_labels(data.test))};
  require_unchanged(before, param_digest(new_fe), "encrypted part");
  return r;
}

}  // namespace fespam::leakage
