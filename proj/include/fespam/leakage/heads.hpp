// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Small classifiers over the t-dimensional encrypted-part output: the
// public head (a clone of the plaintext part) and the adversary.

#include <cmath>
#include <cstring>
#include <span>
#include <sstream>
#include <vector>

#include "fespam/common/digest.hpp"
#include "fespam/common/error.hpp"
#include "fespam/common/random.hpp"
#include "fespam/nn/mlp.hpp"
#include "fespam/nn/quadnet.hpp"

namespace fespam::leakage {

struct DualExample {
  nn::SparseInput x;
  std::size_t pub = 0;
  std::size_t pri = 0;
};

struct DualSplit {
  std::vector<DualExample> train;
  std::vector<DualExample> test;
  std::size_t private_classes = 0;
  std::size_t n = 0;
};

// Fixed input standardization z = (q - shift) * scale followed by an MLP.
// The standardization is part of the head and frozen with it.
struct Head {
  std::vector<double> shift;
  std::vector<double> scale;
  nn::Mlp mlp;
  nn::LossKind loss = nn::LossKind::softmax_ce;

  std::size_t in() const { return mlp.in(); }
  std::size_t classes() const { return mlp.out(); }
  friend bool operator==(const Head&, const Head&) = default;
};

struct HeadConfig {
  std::vector<std::size_t> hidden{32, 16};
  std::size_t epochs = 40;
  double learning_rate = 0.02;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
  bool normalize = true;
};

inline HeadConfig adversary_defaults() { return {}; }

inline HeadConfig public_head_defaults() {
  HeadConfig c;
  c.hidden = {10};
  return c;
}

// The plaintext part of a trained network, viewed as a head.
inline Head public_head_from(const nn::QuadNetParams& p) {
  return Head{std::vector<double>(p.hyper.outputs, 0.0), std::vector<double>(p.hyper.outputs, 1.0), p.plain,
              nn::LossKind::sigmoid_bce};
}

// ------------------------------------------------------------- digests

namespace detail {
inline void hash_doubles(Sha256& h, std::span<const double> v) {
  std::uint64_t len = v.size();
  h.update(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(&len), 8));
  h.update(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(v.data()), v.size() * 8));
}
}  // namespace detail

inline Digest param_digest(const nn::EncryptedPart& fe) {
  Sha256 h;
  h.update("fe");
  detail::hash_doubles(h, fe.projection.flat());
  detail::hash_doubles(h, fe.quadratic.flat());
  return h.finish();
}

inline Digest param_digest(const Head& head) {
  Sha256 h;
  h.update("head");
  detail::hash_doubles(h, head.shift);
  detail::hash_doubles(h, head.scale);
  for (const auto& l : head.mlp.layers) {
    std::uint64_t shape[2] = {l.w.rows(), l.w.cols()};
    h.update(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(shape), 16));
    detail::hash_doubles(h, l.w.flat());
    detail::hash_doubles(h, l.b);
  }
  return h.finish();
}

inline void require_unchanged(const Digest& before, const Digest& after, std::string_view what) {
  if (before != after) fail(Errc::invalid_argument, std::string(what) + " was modified while frozen");
}

// -------------------------------------------------------- forward/back

struct HeadCache {
  std::vector<double> z;
  nn::MlpCache mlp;
};

inline std::span<const double> head_forward(const Head& h, std::span<const double> q, HeadCache& c) {
  require(q.size() == h.shift.size(), Errc::shape_mismatch, "head input width mismatch");
  c.z.resize(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) c.z[i] = (q[i] - h.shift[i]) * h.scale[i];
  return nn::forward(h.mlp, c.z, c.mlp);
}

// Returns dLoss/dq; accumulates parameter gradients when grad is non-null.
inline std::vector<double> head_backward(const Head& h, const HeadCache& c, std::span<const double> dlogits, nn::Mlp* grad) {
  auto dz = nn::backward(h.mlp, c.mlp, dlogits, grad);
  for (std::size_t i = 0; i < dz.size(); ++i) dz[i] *= h.scale[i];
  return dz;
}

inline std::size_t head_predict(const Head& h, std::span<const double> q) {
  HeadCache c;
  return nn::argmax(head_forward(h, q, c));
}

using Outputs = std::vector<std::vector<double>>;

inline Outputs fe_outputs(const nn::EncryptedPart& fe, std::span<const DualExample> data) {
  Outputs out;
  out.reserve(data.size());
  nn::FeCache c;
  for (const auto& d : data) {
    nn::forward_fe(fe, d.x, c);
    out.push_back(c.q);
  }
  return out;
}

inline void fit_standardization(Head& h, const Outputs& outputs, bool normalize) {
  const std::size_t t = outputs.front().size();
  h.shift.assign(t, 0.0);
  h.scale.assign(t, 1.0);
  if (!normalize) return;
  const double n = static_cast<double>(outputs.size());
  for (const auto& q : outputs)
    for (std::size_t i = 0; i < t; ++i) h.shift[i] += q[i] / n;
  std::vector<double> var(t, 0.0);
  for (const auto& q : outputs)
    for (std::size_t i = 0; i < t; ++i) var[i] += (q[i] - h.shift[i]) * (q[i] - h.shift[i]) / n;
  // A constant coordinate carries nothing; zero it rather than divide by ~0.
  for (std::size_t i = 0; i < t; ++i) h.scale[i] = var[i] > 1e-18 ? 1.0 / std::sqrt(var[i]) : 0.0;
}

inline double head_accuracy(const Head& h, const Outputs& outputs, std::span<const std::size_t> labels) {
  require(outputs.size() == labels.size(), Errc::invalid_argument, "outputs and labels differ in length");
  if (outputs.empty()) return 0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) ok += head_predict(h, outputs[i]) == labels[i];
  return static_cast<double>(ok) / static_cast<double>(outputs.size());
}

// Minibatch momentum SGD on precomputed outputs; nothing upstream moves.
inline Head train_head(const Outputs& outputs, std::span<const std::size_t> labels, std::size_t classes,
                       nn::LossKind loss, const HeadConfig& cfg) {
  require(!outputs.empty() && outputs.size() == labels.size(), Errc::invalid_argument, "head training data is empty");
  require(classes >= 2, Errc::degenerate_labels, "a head needs at least two classes");
  require(cfg.learning_rate > 0 && cfg.batch_size > 0, Errc::invalid_argument, "invalid head config");
  Rng rng(cfg.seed);
  std::vector<std::size_t> widths{outputs.front().size()};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(classes);
  Head h;
  h.loss = loss;
  h.mlp = nn::init_mlp(widths, rng);
  fit_standardization(h, outputs, cfg.normalize);

  nn::MomentumSgd opt(cfg.learning_rate, cfg.momentum);
  std::vector<std::size_t> order(outputs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  HeadCache cache;
  std::vector<double> dlogits(classes);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double inv = 1.0 / static_cast<double>(end - start);
      auto grad = nn::zeros_like(h.mlp);
      double total = 0;
      for (std::size_t k = start; k < end; ++k) {
        auto logits = head_forward(h, outputs[order[k]], cache);
        total += nn::apply_loss(loss, logits, labels[order[k]], dlogits);
        for (auto& d : dlogits) d *= inv;
        head_backward(h, cache, dlogits, &grad);
      }
      if (!std::isfinite(total)) {
        std::ostringstream msg;
        msg << "head training diverged at epoch " << epoch;
        fail(Errc::divergence, msg.str());
      }
      auto g = nn::param_blocks(grad);
      nn::clip_global_norm(g, cfg.clip_norm);
      opt.step(nn::param_blocks(h.mlp), g);
    }
  }
  return h;
}

inline std::vector<std::size_t> public_labels(std::span<const DualExample> d) {
  std::vector<std::size_t> out;
  for (const auto& e : d) out.push_back(e.pub);
  return out;
}

inline std::vector<std::size_t> private_labels(std::span<const DualExample> d) {
  std::vector<std::size_t> out;
  for (const auto& e : d) out.push_back(e.pri);
  return out;
}

struct AdversaryResult {
  Head head;
  double accuracy = 0;  // held-out
};

// Trains the adversary on outputs of a frozen encrypted part and reports
// held-out private accuracy.
inline AdversaryResult train_adversary(const nn::EncryptedPart& frozen_fe, const DualSplit& data, const HeadConfig& cfg) {
  const auto before = param_digest(frozen_fe);
  auto train_out = fe_outputs(frozen_fe, data.train);
  auto test_out = fe_outputs(frozen_fe, data.test);
  AdversaryResult r;
  r.head = train_head(train_out, private_labels(data.train), data.private_classes, nn::LossKind::softmax_ce, cfg);
  r.accuracy = head_accuracy(r.head, test_out, private_labels(data.test));
  require_unchanged(before, param_digest(frozen_fe), "encrypted part");
  return r;
}

}  // namespace fespam::leakage
