// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "fespam/common/error.hpp"
#include "fespam/common/random.hpp"
#include "fespam/nn/matrix.hpp"

namespace fespam::nn {

struct Dense {
  Matrix w;  // out x in
  std::vector<double> b;

  std::size_t in() const noexcept { return w.cols(); }
  std::size_t out() const noexcept { return w.rows(); }
  friend bool operator==(const Dense&, const Dense&) = default;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
inline Dense init_dense(std::size_t in, std::size_t out, Rng& rng) {
  Dense d{Matrix(out, in), std::vector<double>(out)};
  double a = 1.0 / std::sqrt(static_cast<double>(in));
  for (auto& v : d.w.flat()) v = rng.uniform(-a, a);
  for (auto& v : d.b) v = rng.uniform(-a, a);
  return d;
}

// Fully connected stack: ReLU after every layer but the last, which
// emits raw logits.
struct Mlp {
  std::vector<Dense> layers;

  std::size_t in() const { return layers.front().in(); }
  std::size_t out() const { return layers.back().out(); }
  friend bool operator==(const Mlp&, const Mlp&) = default;
};

inline Mlp init_mlp(std::span<const std::size_t> widths, Rng& rng) {
  require(widths.size() >= 2, Errc::invalid_argument, "an MLP needs at least input and output widths");
  Mlp m;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) m.layers.push_back(init_dense(widths[i], widths[i + 1], rng));
  return m;
}

inline Mlp zeros_like(const Mlp& m) {
  Mlp z;
  for (const auto& l : m.layers) z.layers.push_back(Dense{Matrix(l.w.rows(), l.w.cols()), std::vector<double>(l.b.size())});
  return z;
}

// Every trainable scalar, in a fixed order (per layer: weights, then biases).
inline std::vector<std::span<double>> param_blocks(Mlp& m) {
  std::vector<std::span<double>> out;
  for (auto& l : m.layers) {
    out.push_back(l.w.flat());
    out.push_back(l.b);
  }
  return out;
}

struct MlpCache {
  std::vector<std::vector<double>> acts;  // acts[0] = input, acts[i+1] = output of layer i
};

inline std::span<const double> forward(const Mlp& m, std::span<const double> input, MlpCache& cache) {
  require(input.size() == m.in(), Errc::shape_mismatch, "MLP input width mismatch");
  cache.acts.resize(m.layers.size() + 1);
  cache.acts[0].assign(input.begin(), input.end());
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    const auto& l = m.layers[li];
    const auto& x = cache.acts[li];
    auto& y = cache.acts[li + 1];
    y.assign(l.out(), 0.0);
    bool last = li + 1 == m.layers.size();
    for (std::size_t r = 0; r < l.out(); ++r) {
      double s = l.b[r];
      auto wr = l.w.row(r);
      for (std::size_t c = 0; c < wr.size(); ++c) s += wr[c] * x[c];
      y[r] = last ? s : std::max(0.0, s);
    }
  }
  return cache.acts.back();
}

// Accumulates parameter gradients into `grad` (when non-null) and returns
// dLoss/dInput.
inline std::vector<double> backward(const Mlp& m, const MlpCache& cache, std::span<const double> dlogits, Mlp* grad) {
  std::vector<double> delta(dlogits.begin(), dlogits.end());
  for (std::size_t li = m.layers.size(); li-- > 0;) {
    const auto& l = m.layers[li];
    const auto& x = cache.acts[li];
    std::vector<double> dx(l.in(), 0.0);
    for (std::size_t r = 0; r < l.out(); ++r) {
      double d = delta[r];
      if (d == 0.0) continue;
      auto wr = l.w.row(r);
      if (grad) {
        auto gr = grad->layers[li].w.row(r);
        for (std::size_t c = 0; c < wr.size(); ++c) gr[c] += d * x[c];
        grad->layers[li].b[r] += d;
      }
      for (std::size_t c = 0; c < wr.size(); ++c) dx[c] += d * wr[c];
    }
    if (li > 0) {
      const auto& pre_act_out = cache.acts[li];  // ReLU output of the previous layer
      for (std::size_t c = 0; c < dx.size(); ++c)
        if (pre_act_out[c] <= 0.0) dx[c] = 0.0;
    }
    delta = std::move(dx);
  }
  return delta;
}

// log(sigmoid(z)) without overflow.
inline double log_sigmoid(double z) { return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }
inline double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

// Independent sigmoid outputs against a one-hot target, summed over
// outputs. Writes dLoss/dlogits.
inline double sigmoid_bce(std::span<const double> logits, std::size_t target, std::span<double> dlogits) {
  double loss = 0;
  for (std::size_t o = 0; o < logits.size(); ++o) {
    double y = o == target ? 1.0 : 0.0;
    double z = logits[o];
    loss -= y * log_sigmoid(z) + (1 - y) * log_sigmoid(-z);
    dlogits[o] = sigmoid(z) - y;
  }
  return loss;
}

inline double softmax_ce(std::span<const double> logits, std::size_t target, std::span<double> dlogits) {
  double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0;
  for (double z : logits) sum += std::exp(z - mx);
  double lse = mx + std::log(sum);
  for (std::size_t o = 0; o < logits.size(); ++o) dlogits[o] = std::exp(logits[o] - lse) - (o == target ? 1.0 : 0.0);
  return lse - logits[target];
}

enum class LossKind { sigmoid_bce, softmax_ce };

inline double apply_loss(LossKind kind, std::span<const double> logits, std::size_t target, std::span<double> dlogits) {
  return kind == LossKind::sigmoid_bce ? sigmoid_bce(logits, target, dlogits) : softmax_ce(logits, target, dlogits);
}

// First index of the maximum; ties go to the lower label.
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

// SGD with classical momentum over a fixed list of parameter blocks.
class MomentumSgd {
 public:
  MomentumSgd(double lr, double momentum) : lr_(lr), momentum_(momentum) {}

  void step(const std::vector<std::span<double>>& params, const std::vector<std::span<double>>& grads) {
    if (velocity_.empty()) {
      for (const auto& p : params) velocity_.emplace_back(p.size(), 0.0);
    }
    for (std::size_t b = 0; b < params.size(); ++b) {
      auto& v = velocity_[b];
      for (std::size_t i = 0; i < params[b].size(); ++i) {
        v[i] = momentum_ * v[i] - lr_ * grads[b][i];
        params[b][i] += v[i];
      }
    }
  }

 private:
  double lr_;
  double momentum_;
  std::vector<std::vector<double>> velocity_;
};

// Rescales gradients so their global L2 norm is at most max_norm; returns
// the norm before clipping.
inline double clip_global_norm(const std::vector<std::span<double>>& grads, double max_norm) {
  double sq = 0;
  for (const auto& g : grads)
    for (double v : g) sq += v * v;
  double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm && std::isfinite(norm)) {
    double s = max_norm / norm;
    for (const auto& g : grads)
      for (double& v : g) v *= s;
  }
  return norm;
}

}  // namespace fespam::nn
