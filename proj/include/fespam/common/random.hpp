// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <openssl/rand.h>

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "fespam/common/digest.hpp"
#include "fespam/common/error.hpp"

namespace fespam {

// Randomness for key material and encryption. Production mode draws from
// the OS CSPRNG; test mode expands a seed with SHA-256 in counter mode so
// keys and ciphertexts are reproducible.
class RandomSource {
 public:
  RandomSource() = default;
  explicit RandomSource(std::uint64_t seed) : seed_(seed) {}

  static RandomSource os() { return RandomSource(); }
  static RandomSource seeded(std::uint64_t seed) { return RandomSource(seed); }

  bool deterministic() const noexcept { return seed_.has_value(); }

  void fill(std::span<std::uint8_t> out) {
    if (!seed_) {
      if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) fail(Errc::io_error, "RAND_bytes failed");
      return;
    }
    std::size_t pos = 0;
    while (pos < out.size()) {
      if (pool_pos_ == pool_.size()) refill();
      std::size_t take = std::min(out.size() - pos, pool_.size() - pool_pos_);
      std::copy_n(pool_.begin() + static_cast<std::ptrdiff_t>(pool_pos_), take, out.begin() + static_cast<std::ptrdiff_t>(pos));
      pos += take;
      pool_pos_ += take;
    }
  }

  std::vector<std::uint8_t> bytes(std::size_t n) {
    std::vector<std::uint8_t> out(n);
    fill(out);
    return out;
  }

  std::uint64_t u64() {
    std::uint8_t b[8];
    fill(b);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
    return v;
  }

 private:
  void refill() {
    Sha256 h;
    std::uint8_t block[16];
    for (int i = 0; i < 8; ++i) block[i] = static_cast<std::uint8_t>(*seed_ >> (8 * i));
    for (int i = 0; i < 8; ++i) block[8 + i] = static_cast<std::uint8_t>(counter_ >> (8 * i));
    ++counter_;
    pool_ = h.update(std::span<const std::uint8_t>(block, 16)).finish();
    pool_pos_ = 0;
  }

  std::optional<std::uint64_t> seed_;
  std::uint64_t counter_ = 0;
  Digest pool_{};
  std::size_t pool_pos_ = 32;
};

// Deterministic generator for training, splits and synthetic corpora.
// Distribution helpers are written out here because the standard
// distributions are not specified bit-for-bit across library vendors.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) fail(Errc::invalid_argument, "Rng::below(0)");
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do v = engine_();
    while (v >= limit);
    return v % n;
  }

  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

  // Index drawn proportionally to non-negative weights.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0;
    for (double w : weights) total += w;
    double r = uniform() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      r -= weights[i];
      if (r < 0) return i;
    }
    return weights.size() - 1;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace fespam
