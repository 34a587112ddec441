// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstdlib>
#include <limits>

#include "fespam/common/error.hpp"
#include "fespam/nn/quantize.hpp"

namespace fespam::fe {

// Default ceiling on certified bounds: BSGS over 2^45 values stays
// tractable with a 2^20..2^24 baby-step table.
inline constexpr std::uint64_t kDefaultDlogCapacity = std::uint64_t{1} << 44;

// B_j = sum_k |W2[j,k]| * (sum_i |P[k,i]| * xmax_i)^2 with xmax = (1, x_max, ...).
// Since |h_k| <= sum_i |P[k,i]| xmax_i for every admissible x, |f_j(x)| <= B_j.
// Saturates at 2^64-1 instead of wrapping.
inline std::uint64_t certified_bound(const nn::QuantizedEncryptedPart& qp, std::size_t j, std::uint32_t x_max) {
  require(j < qp.outputs(), Errc::invalid_argument, "output index out of range");
  using u128 = unsigned __int128;
  const u128 cap = std::numeric_limits<std::uint64_t>::max();
  u128 total = 0;
  auto w2 = qp.quadratic.row(j);
  for (std::size_t k = 0; k < qp.hidden(); ++k) {
    if (w2[k] == 0) continue;
    auto row = qp.projection.row(k);
    u128 h = static_cast<u128>(std::abs(static_cast<std::int64_t>(row[0])));
    for (std::size_t i = 1; i < row.size(); ++i) h += static_cast<u128>(std::abs(static_cast<std::int64_t>(row[i]))) * x_max;
    // h < 2^31 * 2^32 * 2^32 for any realistic shape, so h*h fits 128 bits
    // only while h < 2^64; saturate before that.
    if (h > cap) return std::numeric_limits<std::uint64_t>::max();
    u128 term = h * h;
    if (term > cap) return std::numeric_limits<std::uint64_t>::max();
    term *= static_cast<u128>(std::abs(static_cast<std::int64_t>(w2[k])));
    total += term;
    if (total > cap) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(total);
}

inline std::uint64_t max_certified_bound(const nn::QuantizedEncryptedPart& qp, std::uint32_t x_max) {
  std::uint64_t b = 0;
  for (std::size_t j = 0; j < qp.outputs(); ++j) b = std::max(b, certified_bound(qp, j, x_max));
  return b;
}

}  // namespace fespam::fe
