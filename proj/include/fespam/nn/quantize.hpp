// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "fespam/common/digest.hpp"
#include "fespam/common/error.hpp"
#include "fespam/nn/quadnet.hpp"

namespace fespam::nn {

struct QuantizedMatrix {
  IntMatrix values;
  double scale = 1.0;
};

// Symmetric per-matrix quantization: s = max|w| / (2^(bits-1) - 1),
// w_q = round_half_away_from_zero(w / s). An all-zero matrix gets s = 1.
inline QuantizedMatrix quantize_matrix(const Matrix& w, int bit_width) {
  require(bit_width == 4 || bit_width == 8, Errc::invalid_argument, "bit width must be 4 or 8");
  const double qmax = static_cast<double>((1 << (bit_width - 1)) - 1);
  double amax = 0;
  for (double v : w.flat()) amax = std::max(amax, std::abs(v));
  require(std::isfinite(amax), Errc::invalid_argument, "cannot quantize non-finite weights");
  QuantizedMatrix q{IntMatrix(w.rows(), w.cols()), amax > 0 ? amax / qmax : 1.0};
  auto src = w.flat();
  auto dst = q.values.flat();
  for (std::size_t i = 0; i < src.size(); ++i) {
    double r = std::round(src[i] / q.scale);  // std::round rounds halves away from zero
    dst[i] = static_cast<std::int32_t>(std::clamp(r, -qmax, qmax));
  }
  return q;
}

inline Matrix dequantize(const QuantizedMatrix& q) {
  Matrix out(q.values.rows(), q.values.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.flat()[i] = q.values.flat()[i] * q.scale;
  return out;
}

struct QuantizedEncryptedPart {
  IntMatrix projection;  // hidden x (n+1)
  IntMatrix quadratic;   // outputs x hidden
  double scale_projection = 1.0;
  double scale_quadratic = 1.0;
  int bit_width = 8;

  std::size_t n() const noexcept { return projection.cols() - 1; }
  std::size_t hidden() const noexcept { return projection.rows(); }
  std::size_t outputs() const noexcept { return quadratic.rows(); }
  // q = q_int * scale_P^2 * scale_W2
  double output_scale() const noexcept { return scale_projection * scale_projection * scale_quadratic; }

  friend bool operator==(const QuantizedEncryptedPart&, const QuantizedEncryptedPart&) = default;
};

inline QuantizedEncryptedPart quantize(const EncryptedPart& fe, int bit_width = 8) {
  auto p = quantize_matrix(fe.projection, bit_width);
  auto w = quantize_matrix(fe.quadratic, bit_width);
  return {std::move(p.values), std::move(w.values), p.scale, w.scale, bit_width};
}

inline QuantizedEncryptedPart quantize(const QuadNetParams& params, int bit_width = 8) { return quantize(params.fe, bit_width); }

// Identity of the factored quadratic forms a functional key is derived
// from. Scales are excluded: they only matter after decryption.
inline Digest form_digest(const QuantizedEncryptedPart& qp) {
  Sha256 h;
  h.update("fespam-form-v1");
  auto put_u64 = [&](std::uint64_t v) {
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    h.update(std::span<const std::uint8_t>(b, 8));
  };
  for (const IntMatrix* m : {&qp.projection, &qp.quadratic}) {
    put_u64(m->rows());
    put_u64(m->cols());
    for (auto v : m->flat()) put_u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(v)));
  }
  return h.finish();
}

// Exact integer evaluation of the encrypted part; the value every FE
// decryption must reproduce.
//
// Width: with n <= 5000, x <= 100 and |w| <= 127, |h_k| <= 127 * (1 + 5000*100) < 2^26,
// so h_k^2 < 2^52, each term |w2| * h_k^2 < 2^59 and a sum of 40 terms < 2^65.
// Accumulation is therefore done in 128 bits; a result outside int64 is an
// Overflow error rather than a wrapped value.
inline std::vector<std::int64_t> forward_encryptedpart_int(std::span<const std::uint32_t> x, const QuantizedEncryptedPart& qp) {
  require(x.size() == qp.n(), Errc::shape_mismatch,
          "input has " + std::to_string(x.size()) + " features, model expects " + std::to_string(qp.n()));
  std::vector<__int128> h2(qp.hidden());
  for (std::size_t k = 0; k < qp.hidden(); ++k) {
    auto row = qp.projection.row(k);
    __int128 s = row[0];
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i]) s += static_cast<__int128>(row[i + 1]) * x[i];
    h2[k] = s * s;
  }
  std::vector<std::int64_t> out(qp.outputs());
  for (std::size_t j = 0; j < qp.outputs(); ++j) {
    auto row = qp.quadratic.row(j);
    __int128 acc = 0;
    for (std::size_t k = 0; k < row.size(); ++k) acc += static_cast<__int128>(row[k]) * h2[k];
    if (acc > std::numeric_limits<std::int64_t>::max() || acc < std::numeric_limits<std::int64_t>::min())
      fail(Errc::overflow, "quadratic output " + std::to_string(j) + " exceeds 64 bits");
    out[j] = static_cast<std::int64_t>(acc);
  }
  return out;
}

inline std::vector<std::int64_t> forward_encryptedpart_int(const text::FeatureVector& x, const QuantizedEncryptedPart& qp) {
  return forward_encryptedpart_int(std::span<const std::uint32_t>(x.counts), qp);
}

inline std::vector<double> dequantize_outputs(std::span<const std::int64_t> q_int, const QuantizedEncryptedPart& qp) {
  std::vector<double> q(q_int.size());
  for (std::size_t j = 0; j < q.size(); ++j) q[j] = static_cast<double>(q_int[j]) * qp.output_scale();
  return q;
}

inline Prediction predict_from_intermediate(std::span<const std::int64_t> q_int, const QuantizedEncryptedPart& qp,
                                            const Mlp& plain) {
  require(q_int.size() == qp.outputs() && q_int.size() == plain.in(), Errc::shape_mismatch,
          "intermediate vector has the wrong length");
  auto q = dequantize_outputs(q_int, qp);
  return predict_from_q(plain, q);
}

// Optional alternative to plain dequantization: retrain only the plaintext
// part on the dequantized integer outputs so it absorbs rounding bias.
inline Mlp refit_plain_on_quantized(const Mlp& plain, const QuantizedEncryptedPart& qp,
                                    std::span<const text::LabeledVector> data, const TrainConfig& cfg) {
  check_config(cfg);
  require(!data.empty(), Errc::invalid_argument, "training set is empty");
  std::vector<std::vector<double>> qs;
  qs.reserve(data.size());
  for (const auto& d : data) {
    auto q_int = forward_encryptedpart_int(d.x, qp);
    qs.push_back(dequantize_outputs(q_int, qp));
  }
  Mlp out = plain;
  Rng rng(cfg.seed ^ 0x51ed270b27a5c0e3ULL);
  MomentumSgd opt(cfg.learning_rate, cfg.momentum);
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  MlpCache mc;
  std::vector<double> dlogits(out.out());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      auto grad = zeros_like(out);
      std::size_t end = std::min(order.size(), start + cfg.batch_size);
      double inv = 1.0 / static_cast<double>(end - start);
      for (std::size_t i = start; i < end; ++i) {
        auto logits = forward(out, qs[order[i]], mc);
        double loss = sigmoid_bce(logits, static_cast<std::size_t>(data[order[i]].label), dlogits);
        if (!std::isfinite(loss)) fail(Errc::divergence, "plaintext refit loss became non-finite");
        for (auto& d : dlogits) d *= inv;
        backward(out, mc, dlogits, &grad);
      }
      auto gblocks = param_blocks(grad);
      clip_global_norm(gblocks, cfg.clip_norm);
      opt.step(param_blocks(out), gblocks);
    }
  }
  return out;
}

}  // namespace fespam::nn
