// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Logistic-regression baseline scored against Paillier-encrypted weights:
// the owner encrypts the model, the client scores its own plaintext email
// homomorphically, the owner decrypts the score and thresholds it.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <sstream>
#include <vector>

#include "fespam/common/error.hpp"
#include "fespam/common/random.hpp"
#include "fespam/he/paillier.hpp"
#include "fespam/nn/mlp.hpp"
#include "fespam/text/split.hpp"

namespace fespam::he {

struct LRWeights {
  std::vector<double> w;
  double b = 0;

  std::size_t n() const noexcept { return w.size(); }
  friend bool operator==(const LRWeights&, const LRWeights&) = default;
};

struct LRConfig {
  std::size_t epochs = 30;
  double learning_rate = 0.05;
  double l2 = 1e-4;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
};

inline double lr_score(const LRWeights& m, std::span<const std::uint32_t> x) {
  require(x.size() == m.n(), Errc::dimension_mismatch, "feature vector length does not match the model");
  double s = m.b;
  for (std::size_t i = 0; i < x.size(); ++i) s += m.w[i] * x[i];
  return s;
}

// Plaintext reference: spam iff sigmoid(score) > 0.5; ties go to ham.
inline text::Label lr_predict(const LRWeights& m, const text::FeatureVector& x) {
  return lr_score(m, x.counts) > 0 ? text::Label::spam : text::Label::ham;
}

inline double lr_accuracy(const LRWeights& m, std::span<const text::LabeledVector> data) {
  if (data.empty()) return 0;
  std::size_t ok = 0;
  for (const auto& d : data) ok += lr_predict(m, d.x) == d.label;
  return static_cast<double>(ok) / static_cast<double>(data.size());
}

// Minibatch gradient descent on mean log-loss + (l2/2)|w|^2.
inline LRWeights train_lr(const text::DatasetSplit& split, const LRConfig& cfg = {}) {
  require(!split.train.empty(), Errc::invalid_argument, "training split is empty");
  require(cfg.learning_rate > 0 && cfg.batch_size > 0 && cfg.l2 >= 0, Errc::invalid_argument, "invalid LR config");
  const std::size_t n = split.train.front().x.size();
  LRWeights m{std::vector<double>(n, 0.0), 0.0};
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(split.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<double> gw(n);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::fill(gw.begin(), gw.end(), 0.0);
      double gb = 0, loss = 0;
      for (std::size_t k = start; k < end; ++k) {
        const auto& d = split.train[order[k]];
        double z = lr_score(m, d.x.counts);
        double y = d.label == text::Label::spam ? 1.0 : 0.0;
        loss -= y * nn::log_sigmoid(z) + (1 - y) * nn::log_sigmoid(-z);
        double g = nn::sigmoid(z) - y;
        for (std::size_t i = 0; i < n; ++i)
          if (d.x.counts[i]) gw[i] += g * d.x.counts[i];
        gb += g;
      }
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "logistic regression diverged at epoch " << epoch;
        fail(Errc::divergence, msg.str());
      }
      double inv = 1.0 / static_cast<double>(end - start);
      for (std::size_t i = 0; i < n; ++i) m.w[i] -= cfg.learning_rate * (gw[i] * inv + cfg.l2 * m.w[i]);
      m.b -= cfg.learning_rate * gb * inv;
    }
  }
  return m;
}

// ------------------------------------------------------------- fixed point

inline constexpr unsigned kDefaultScaleBits = 16;

inline mpz_class encode_fixed(double v, unsigned scale_bits, const PaillierPublicKey& pk) {
  require(std::isfinite(v), Errc::encoding_overflow, "cannot encode a non-finite weight");
  double scaled = std::round(std::ldexp(v, static_cast<int>(scale_bits)));
  // 2^1000 is far below any supported N/2 yet far above any sane weight.
  require(std::abs(scaled) < std::ldexp(1.0, std::min<int>(1000, static_cast<int>(pk.bits) - 2)), Errc::encoding_overflow,
          "weight is too large for the plaintext space");
  mpz_class z(0);
  mpz_set_d(z.get_mpz_t(), scaled);
  return reduce(pk, z);
}

inline double decode_fixed(const mpz_class& m, unsigned scale_bits, const PaillierPublicKey& pk) {
  mpz_class s = to_signed(pk, m);
  return std::ldexp(s.get_d(), -static_cast<int>(scale_bits));
}

struct EncryptedLRModel {
  PaillierPublicKey pub;
  unsigned scale_bits = kDefaultScaleBits;
  std::vector<mpz_class> w;
  mpz_class b;

  std::size_t n() const noexcept { return w.size(); }
};

inline EncryptedLRModel encrypt_model(const PaillierPublicKey& pk, const LRWeights& m, unsigned scale_bits,
                                      RandomSource& rs) {
  require(scale_bits >= 16 && scale_bits <= 60, Errc::invalid_argument, "scale_bits must be in [16, 60]");
  EncryptedLRModel e{pk, scale_bits, {}, {}};
  e.w.reserve(m.n());
  for (double v : m.w) e.w.push_back(paillier_encrypt(pk, encode_fixed(v, scale_bits, pk), rs));
  e.b = paillier_encrypt(pk, encode_fixed(m.b, scale_bits, pk), rs);
  return e;
}

// Enc(sum_i w_i x_i + b), evaluated over every coordinate so the cost is
// linear in n regardless of sparsity.
inline mpz_class client_score(const EncryptedLRModel& em, std::span<const std::uint32_t> x) {
  require(x.size() == em.n(), Errc::dimension_mismatch,
          "feature vector has " + std::to_string(x.size()) + " entries, model has " + std::to_string(em.n()));
  mpz_class acc = em.b, term, e;
  for (std::size_t i = 0; i < x.size(); ++i) {
    e = x[i];
    mpz_powm(term.get_mpz_t(), em.w[i].get_mpz_t(), e.get_mpz_t(), em.pub.n2.get_mpz_t());
    acc = acc * term % em.pub.n2;
  }
  return acc;
}

struct HePrediction {
  text::Label label = text::Label::ham;
  double score = 0;
  double probability = 0.5;
};

inline HePrediction owner_decrypt_and_predict(const PaillierKeys& keys, const mpz_class& enc_score, unsigned scale_bits) {
  auto m = paillier_decrypt(keys, enc_score);
  HePrediction p;
  p.score = decode_fixed(m, scale_bits, keys.pub);
  p.probability = nn::sigmoid(p.score);
  // Decide on the exact integer so a zero score is a tie, resolved to ham.
  p.label = to_signed(keys.pub, m) > 0 ? text::Label::spam : text::Label::ham;
  return p;
}

// Worst-case fixed-point error of the decrypted score, in score units:
// each weight and the bias is off by at most half an ulp of 2^-scale_bits.
inline double fixed_point_error_bound(std::span<const std::uint32_t> x, unsigned scale_bits) {
  double mass = 1;
  for (auto v : x) mass += v;
  return 0.5 * mass * std::ldexp(1.0, -static_cast<int>(scale_bits));
}

// True when fixed-point error could flip the label; such emails are
// reported separately rather than counted as disagreements.
inline bool near_decision_boundary(const LRWeights& m, std::span<const std::uint32_t> x, unsigned scale_bits) {
  return std::abs(lr_score(m, x)) <= fixed_point_error_bound(x, scale_bits);
}

// ------------------------------------------------------------ model file

inline Bytes serialize_encrypted_model(const EncryptedLRModel& em) {
  ByteWriter w;
  w.raw("QHM1");
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(em.n()));
  w.u32(em.scale_bits);
  w.u32(em.pub.bits);
  w.blob(serialize_public(em.pub));
  for (const auto& c : em.w) w.blob(to_bytes(c));
  w.blob(to_bytes(em.b));
  return std::move(w).take();
}

inline EncryptedLRModel parse_encrypted_model(std::span<const std::uint8_t> data) {
  ByteReader r(data);
  r.expect_magic("QHM1");
  require(r.u32() == 1, Errc::parse_error, "unsupported version");
  auto n = r.u32();
  EncryptedLRModel em;
  em.scale_bits = r.u32();
  require(em.scale_bits >= 16 && em.scale_bits <= 60, Errc::parse_error, "scale bits out of range");
  auto bits = r.u32();
  em.pub = parse_public(r.blob(2048));
  require(em.pub.bits == bits, Errc::parse_error, "key size metadata disagrees with the key");
  const std::size_t max_ct = 2 * ((bits + 7) / 8);
  require(n >= 1 && r.remaining() >= (std::size_t{n} + 1) * 4, Errc::parse_error, "weight count does not fit the payload");
  em.w.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    em.w.push_back(from_bytes(r.blob(max_ct)));
    check_ciphertext(em.pub, em.w.back());
  }
  em.b = from_bytes(r.blob(max_ct));
  check_ciphertext(em.pub, em.b);
  r.expect_end();
  return em;
}

inline Bytes serialize_lr(const LRWeights& m) {
  ByteWriter w;
  w.raw("QLR1");
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(m.n()));
  auto put = [&](double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    w.u64(u);
  };
  for (double v : m.w) put(v);
  put(m.b);
  return std::move(w).take();
}

inline LRWeights parse_lr(std::span<const std::uint8_t> data) {
  ByteReader r(data);
  r.expect_magic("QLR1");
  require(r.u32() == 1, Errc::parse_error, "unsupported version");
  auto n = r.u32();
  require(r.remaining() == (std::size_t{n} + 1) * 8, Errc::parse_error, "weight count does not match the payload");
  auto get = [&] {
    std::uint64_t u = r.u64();
    double v;
    std::memcpy(&v, &u, 8);
    require(std::isfinite(v), Errc::parse_error, "non-finite weight");
    return v;
  };
  LRWeights m;
  for (std::uint32_t i = 0; i < n; ++i) m.w.push_back(get());
  m.b = get();
  return m;
}

}  // namespace fespam::he
