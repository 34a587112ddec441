// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Class labels and count vectors. Everything downstream of featurization
// (model, FE scheme, server) needs only this, not the message parser.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fespam/common/error.hpp"

namespace fespam::text {

enum class Label : std::uint8_t { ham = 0, spam = 1 };

constexpr std::string_view to_string(Label l) noexcept { return l == Label::spam ? "spam" : "ham"; }

inline Label parse_label(std::string_view s) {
  if (s == "spam") return Label::spam;
  if (s == "ham") return Label::ham;
  fail(Errc::parse_error, "unknown label '" + std::string(s) + "'");
}

struct FeatureVector {
  std::vector<std::uint32_t> counts;

  std::size_t size() const noexcept { return counts.size(); }
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

enum class TermWeighting : std::uint8_t { counts, binary };

}  // namespace fespam::text
