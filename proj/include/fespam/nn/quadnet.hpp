// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <vector>

#include "fespam/common/error.hpp"
#include "fespam/common/random.hpp"
#include "fespam/nn/matrix.hpp"
#include "fespam/nn/mlp.hpp"
#include "fespam/text/split.hpp"

namespace fespam::nn {

struct Hyper {
  std::size_t n = 0;             // selected features
  std::size_t hidden = 40;       // d, width of the projection
  std::size_t outputs = 20;      // t, quadratic forms evaluated under encryption
  std::size_t plain_hidden = 10;
  std::size_t labels = 2;

  friend bool operator==(const Hyper&, const Hyper&) = default;
};

// The FE-compatible part: q_j(x) = sum_k quadratic(j,k) * (projection * x~)_k^2
// with x~ = (1, x). The first projection column is the absorbed bias.
struct EncryptedPart {
  Matrix projection;  // hidden x (n+1)
  Matrix quadratic;   // outputs x hidden, no bias

  std::size_t n() const noexcept { return projection.cols() - 1; }
  std::size_t hidden() const noexcept { return projection.rows(); }
  std::size_t outputs() const noexcept { return quadratic.rows(); }
  friend bool operator==(const EncryptedPart&, const EncryptedPart&) = default;
};

struct QuadNetParams {
  Hyper hyper;
  EncryptedPart fe;
  Mlp plain;  // outputs -> plain_hidden (ReLU) -> labels, sigmoid on top

  friend bool operator==(const QuadNetParams&, const QuadNetParams&) = default;
};

inline EncryptedPart init_encrypted_part(const Hyper& h, Rng& rng) {
  EncryptedPart fe{Matrix(h.hidden, h.n + 1), Matrix(h.outputs, h.hidden)};
  double a = 1.0 / std::sqrt(static_cast<double>(h.n + 1));
  for (auto& v : fe.projection.flat()) v = rng.uniform(-a, a);
  double b = 1.0 / std::sqrt(static_cast<double>(h.hidden));
  for (auto& v : fe.quadratic.flat()) v = rng.uniform(-b, b);
  return fe;
}

inline QuadNetParams init_quadnet(const Hyper& h, std::uint64_t seed) {
  require(h.n >= 1, Errc::invalid_argument, "feature count must be >= 1");
  Rng rng(seed);
  QuadNetParams p{h, init_encrypted_part(h, rng), {}};
  std::array<std::size_t, 3> widths{h.outputs, h.plain_hidden, h.labels};
  p.plain = init_mlp(widths, rng);
  return p;
}

inline std::vector<std::span<double>> param_blocks(EncryptedPart& fe) {
  return {fe.projection.flat(), fe.quadratic.flat()};
}

inline EncryptedPart zeros_like(const EncryptedPart& fe) {
  return {Matrix(fe.projection.rows(), fe.projection.cols()), Matrix(fe.quadratic.rows(), fe.quadratic.cols())};
}

// Nonzero coordinates of x~ = (1, x); index 0 is the bias slot.
struct SparseInput {
  std::vector<std::uint32_t> index;
  std::vector<double> value;
  std::size_t n = 0;
};

inline SparseInput make_input(const text::FeatureVector& x) {
  SparseInput s;
  s.n = x.size();
  s.index.push_back(0);
  s.value.push_back(1.0);
  for (std::size_t i = 0; i < x.counts.size(); ++i)
    if (x.counts[i] != 0) {
      s.index.push_back(static_cast<std::uint32_t>(i + 1));
      s.value.push_back(static_cast<double>(x.counts[i]));
    }
  return s;
}

struct FeCache {
  std::vector<double> h;  // projection * x~
  std::vector<double> q;
};

inline void forward_fe(const EncryptedPart& fe, const SparseInput& x, FeCache& cache) {
  require(x.n == fe.n(), Errc::shape_mismatch,
          "input has " + std::to_string(x.n) + " features, model expects " + std::to_string(fe.n()));
  cache.h.assign(fe.hidden(), 0.0);
  for (std::size_t k = 0; k < fe.hidden(); ++k) {
    auto row = fe.projection.row(k);
    double s = 0;
    for (std::size_t e = 0; e < x.index.size(); ++e) s += row[x.index[e]] * x.value[e];
    cache.h[k] = s;
  }
  cache.q.assign(fe.outputs(), 0.0);
  for (std::size_t j = 0; j < fe.outputs(); ++j) {
    auto row = fe.quadratic.row(j);
    double s = 0;
    for (std::size_t k = 0; k < row.size(); ++k) s += row[k] * cache.h[k] * cache.h[k];
    cache.q[j] = s;
  }
}

inline void backward_fe(const EncryptedPart& fe, const SparseInput& x, const FeCache& cache, std::span<const double> dq,
                        EncryptedPart& grad) {
  std::vector<double> dh(fe.hidden(), 0.0);
  for (std::size_t j = 0; j < fe.outputs(); ++j) {
    auto row = fe.quadratic.row(j);
    auto grow = grad.quadratic.row(j);
    for (std::size_t k = 0; k < row.size(); ++k) {
      grow[k] += dq[j] * cache.h[k] * cache.h[k];
      dh[k] += dq[j] * row[k] * 2.0 * cache.h[k];
    }
  }
  for (std::size_t k = 0; k < fe.hidden(); ++k) {
    auto grow = grad.projection.row(k);
    for (std::size_t e = 0; e < x.index.size(); ++e) grow[x.index[e]] += dh[k] * x.value[e];
  }
}

struct Prediction {
  text::Label label = text::Label::ham;
  std::array<double, 2> probs{0.5, 0.5};
};

inline Prediction predict_from_q(const Mlp& plain, std::span<const double> q) {
  MlpCache cache;
  auto logits = forward(plain, q, cache);
  Prediction p;
  p.probs = {sigmoid(logits[0]), sigmoid(logits[1])};
  p.label = static_cast<text::Label>(argmax(p.probs));
  return p;
}

inline Prediction forward_float(const QuadNetParams& params, const text::FeatureVector& x) {
  FeCache c;
  forward_fe(params.fe, make_input(x), c);
  return predict_from_q(params.plain, c.q);
}

struct Example {
  SparseInput x;
  std::size_t label = 0;
};

inline std::vector<Example> make_examples(std::span<const text::LabeledVector> data) {
  std::vector<Example> out;
  out.reserve(data.size());
  for (const auto& d : data) out.push_back({make_input(d.x), static_cast<std::size_t>(d.label)});
  return out;
}

// Mean sigmoid-BCE over the batch; accumulates mean gradients when the
// grad pointers are non-null.
inline double batch_loss(const QuadNetParams& p, std::span<const Example> batch, EncryptedPart* gfe, Mlp* gplain) {
  FeCache fc;
  MlpCache mc;
  double total = 0;
  const double inv = 1.0 / static_cast<double>(batch.size());
  std::vector<double> dlogits(p.hyper.labels);
  for (const auto& ex : batch) {
    forward_fe(p.fe, ex.x, fc);
    // ReLU would silently zero a NaN intermediate; surface it as a NaN loss.
    for (double q : fc.q)
      if (!std::isfinite(q)) return std::numeric_limits<double>::quiet_NaN();
    auto logits = forward(p.plain, fc.q, mc);
    total += sigmoid_bce(logits, ex.label, dlogits);
    if (gfe || gplain) {
      for (auto& d : dlogits) d *= inv;
      auto dq = backward(p.plain, mc, dlogits, gplain);
      if (gfe) backward_fe(p.fe, ex.x, fc, dq, *gfe);
    }
  }
  return total * inv;
}

struct TrainConfig {
  std::size_t epochs = 40;
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  double momentum = 0.9;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
};

struct TrainReport {
  std::vector<double> epoch_loss;
};

inline void check_config(const TrainConfig& cfg) {
  require(cfg.learning_rate > 0 && cfg.batch_size > 0 && cfg.momentum >= 0 && cfg.momentum < 1,
          Errc::invalid_argument, "training config must be positive");
}

// Continues training from `params` in place.
inline void fit(QuadNetParams& params, std::span<const Example> data, const TrainConfig& cfg, TrainReport* report = nullptr) {
  check_config(cfg);
  require(!data.empty(), Errc::invalid_argument, "training set is empty");
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  MomentumSgd opt(cfg.learning_rate, cfg.momentum);
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<Example> batch;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i) batch.push_back(data[order[i]]);
      auto gfe = zeros_like(params.fe);
      auto gplain = zeros_like(params.plain);
      double loss = batch_loss(params, batch, &gfe, &gplain);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "loss became non-finite at epoch " << epoch << ", batch starting " << start;
        fail(Errc::divergence, msg.str());
      }
      epoch_loss += loss * static_cast<double>(batch.size());
      auto pblocks = param_blocks(params.fe);
      auto gblocks = param_blocks(gfe);
      for (auto b : param_blocks(params.plain)) pblocks.push_back(b);
      for (auto b : param_blocks(gplain)) gblocks.push_back(b);
      clip_global_norm(gblocks, cfg.clip_norm);
      opt.step(pblocks, gblocks);
    }
    if (report) report->epoch_loss.push_back(epoch_loss / static_cast<double>(data.size()));
  }
}

inline QuadNetParams train(const text::DatasetSplit& split, const TrainConfig& cfg, TrainReport* report = nullptr,
                           Hyper hyper = {}) {
  require(!split.train.empty(), Errc::invalid_argument, "training split is empty");
  hyper.n = split.train.front().x.size();
  auto params = init_quadnet(hyper, cfg.seed);
  auto data = make_examples(split.train);
  fit(params, data, cfg, report);
  return params;
}

inline double accuracy(const QuadNetParams& params, std::span<const text::LabeledVector> data) {
  if (data.empty()) return 0;
  std::size_t ok = 0;
  for (const auto& d : data) ok += forward_float(params, d.x).label == d.label;
  return static_cast<double>(ok) / static_cast<double>(data.size());
}

// Max relative error between analytic gradients and central differences
// over every parameter. Relative error is |a - f| / max(|a|, |f|, floor).
inline double gradient_check(const QuadNetParams& params, std::span<const text::LabeledVector> batch_data,
                             double eps = 1e-4, double floor = 1e-6) {
  auto batch = make_examples(batch_data);
  QuadNetParams work = params;
  auto gfe = zeros_like(work.fe);
  auto gplain = zeros_like(work.plain);
  batch_loss(work, batch, &gfe, &gplain);

  auto pblocks = param_blocks(work.fe);
  auto gblocks = param_blocks(gfe);
  for (auto b : param_blocks(work.plain)) pblocks.push_back(b);
  for (auto b : param_blocks(gplain)) gblocks.push_back(b);

  double worst = 0;
  for (std::size_t b = 0; b < pblocks.size(); ++b) {
    for (std::size_t i = 0; i < pblocks[b].size(); ++i) {
      double saved = pblocks[b][i];
      pblocks[b][i] = saved + eps;
      double up = batch_loss(work, batch, nullptr, nullptr);
      pblocks[b][i] = saved - eps;
      double down = batch_loss(work, batch, nullptr, nullptr);
      pblocks[b][i] = saved;
      double numeric = (up - down) / (2 * eps);
      double analytic = gblocks[b][i];
      double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace fespam::nn
