// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Private labelings for the leakage experiments, plus a plug-in mutual
// information estimate used to check label independence.

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fespam/common/error.hpp"
#include "fespam/text/preprocess.hpp"
#include "fespam/text/vocabulary.hpp"

namespace fespam::leakage {

enum class PrivateScheme : std::uint8_t { word_presence, synthetic_category };

constexpr std::string_view to_string(PrivateScheme s) noexcept {
  return s == PrivateScheme::word_presence ? "word_presence" : "synthetic_category";
}

struct PrivateLabeling {
  PrivateScheme scheme = PrivateScheme::synthetic_category;
  std::vector<int> labels;  // one per document, in corpus order
  std::size_t classes = 0;
  std::string designated_term;  // word_presence only
};

inline void check_labels(const PrivateLabeling& l) {
  require(l.classes >= 2, Errc::degenerate_labels, "a private task needs at least two classes");
  std::vector<std::size_t> seen(l.classes, 0);
  for (int v : l.labels) {
    require(v >= 0 && static_cast<std::size_t>(v) < l.classes, Errc::invalid_argument, "private label out of range");
    ++seen[static_cast<std::size_t>(v)];
  }
  std::size_t populated = 0;
  for (auto c : seen) populated += c > 0;
  require(populated >= 2, Errc::degenerate_labels, "every document has the same private label");
}

// Top-k terms by information gain; the document's label is whether it
// contains the term at position `rank` of that list.
inline PrivateLabeling word_presence_labels(std::span<const text::TokenizedEmail> corpus, const text::Vocabulary& vocab,
                                            std::size_t k = 10, std::size_t rank = 0) {
  require(k >= 1, Errc::invalid_argument, "k must be >= 1");
  if (k > vocab.size())
    fail(Errc::k_too_large, "k = " + std::to_string(k) + " exceeds the vocabulary size " + std::to_string(vocab.size()));
  require(rank < k, Errc::invalid_argument, "designated rank must be below k");
  auto order = text::rank_by_information_gain(vocab);
  PrivateLabeling out;
  out.scheme = PrivateScheme::word_presence;
  out.classes = 2;
  out.designated_term = vocab.term(order[rank]);
  out.labels.reserve(corpus.size());
  for (const auto& e : corpus)
    out.labels.push_back(std::find(e.tokens.begin(), e.tokens.end(), out.designated_term) != e.tokens.end() ? 1 : 0);
  check_labels(out);
  return out;
}

// All k labelings at once, one per top-k term.
inline std::vector<PrivateLabeling> word_presence_tasks(std::span<const text::TokenizedEmail> corpus,
                                                        const text::Vocabulary& vocab, std::size_t k = 10) {
  std::vector<PrivateLabeling> out;
  for (std::size_t r = 0; r < k; ++r) out.push_back(word_presence_labels(corpus, vocab, k, r));
  return out;
}

inline PrivateLabeling synthetic_category_labels(std::vector<int> labels, std::size_t classes) {
  PrivateLabeling out{PrivateScheme::synthetic_category, std::move(labels), classes, {}};
  check_labels(out);
  return out;
}

// Plug-in estimate of I(A; B) in bits from paired samples.
inline double mutual_information_bits(std::span<const int> a, std::span<const int> b) {
  require(a.size() == b.size() && !a.empty(), Errc::invalid_argument, "mutual information needs paired samples");
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> pa, pb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1;
    pa[a[i]] += 1;
    pb[b[i]] += 1;
  }
  const double n = static_cast<double>(a.size());
  double mi = 0;
  for (const auto& [key, c] : joint) mi += c / n * std::log2(c * n / (pa[key.first] * pb[key.second]));
  return std::max(0.0, mi);
}

inline double majority_rate(std::span<const int> labels) {
  require(!labels.empty(), Errc::invalid_argument, "no labels");
  std::map<int, std::size_t> counts;
  for (int v : labels) ++counts[v];
  std::size_t best = 0;
  for (const auto& [k, c] : counts) best = std::max(best, c);
  return static_cast<double>(best) / static_cast<double>(labels.size());
}

}  // namespace fespam::leakage
