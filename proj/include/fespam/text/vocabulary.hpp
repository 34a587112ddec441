// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "fespam/common/error.hpp"
#include "fespam/text/preprocess.hpp"

namespace fespam::text {

using ClassCounts = std::array<std::uint32_t, 2>;  // indexed by Label

// Ordered term dictionary with document-level per-class presence counts.
class Vocabulary {
 public:
  Vocabulary() = default;

  // Terms need not be sorted; they are stored lexicographically.
  Vocabulary(std::vector<std::pair<std::string, ClassCounts>> entries, ClassCounts total_docs)
      : total_docs_(total_docs) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    terms_.reserve(entries.size());
    doc_freq_.reserve(entries.size());
    for (auto& [term, df] : entries) {
      for (int c = 0; c < 2; ++c)
        require(df[c] <= total_docs_[c], Errc::invalid_argument, "doc_freq exceeds class total for '" + term + "'");
      if (!index_.emplace(term, static_cast<std::uint32_t>(terms_.size())).second)
        fail(Errc::invalid_argument, "duplicate term '" + term + "'");
      terms_.push_back(std::move(term));
      doc_freq_.push_back(df);
    }
  }

  std::size_t size() const noexcept { return terms_.size(); }
  const std::vector<std::string>& terms() const noexcept { return terms_; }
  const std::string& term(std::size_t i) const { return terms_.at(i); }
  const ClassCounts& doc_freq(std::size_t i) const { return doc_freq_.at(i); }
  const ClassCounts& total_docs() const noexcept { return total_docs_; }

  std::optional<std::uint32_t> find(std::string_view term) const {
    auto it = index_.find(std::string(term));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::uint32_t index_of(std::string_view term) const {
    auto i = find(term);
    if (!i) fail(Errc::unknown_term, "'" + std::string(term) + "' not in vocabulary");
    return *i;
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.terms_ == b.terms_ && a.doc_freq_ == b.doc_freq_ && a.total_docs_ == b.total_docs_;
  }

 private:
  std::vector<std::string> terms_;
  std::vector<ClassCounts> doc_freq_;
  ClassCounts total_docs_{0, 0};
  std::unordered_map<std::string, std::uint32_t> index_;
};

inline Vocabulary build_vocabulary(std::span<const TokenizedEmail> corpus) {
  if (corpus.empty()) fail(Errc::empty_corpus, "cannot build a vocabulary from zero documents");
  std::unordered_map<std::string, ClassCounts> df;
  ClassCounts totals{0, 0};
  std::unordered_set<std::string_view> seen;
  for (const auto& email : corpus) {
    auto c = static_cast<std::size_t>(email.label);
    ++totals[c];
    seen.clear();
    for (const auto& tok : email.tokens)
      if (seen.insert(tok).second) ++df[tok][c];
  }
  std::vector<std::pair<std::string, ClassCounts>> entries(df.begin(), df.end());
  return Vocabulary(std::move(entries), totals);
}

namespace detail {
inline double entropy2(double a, double b) {
  double n = a + b;
  if (n <= 0) return 0;
  double h = 0;
  for (double v : {a, b})
    if (v > 0) h -= (v / n) * std::log2(v / n);
  return h;
}
}  // namespace detail

// Binary presence/absence information gain in bits.
inline double information_gain(const ClassCounts& df, const ClassCounts& totals) {
  double n = static_cast<double>(totals[0]) + totals[1];
  if (n <= 0) return 0;
  double present = static_cast<double>(df[0]) + df[1];
  double absent = n - present;
  double h_y = detail::entropy2(totals[0], totals[1]);
  double h_present = detail::entropy2(df[0], df[1]);
  double h_absent = detail::entropy2(static_cast<double>(totals[0]) - df[0], static_cast<double>(totals[1]) - df[1]);
  double ig = h_y - (present / n) * h_present - (absent / n) * h_absent;
  return std::clamp(ig, 0.0, h_y);
}

inline double information_gain(const Vocabulary& vocab, std::string_view term) {
  auto i = vocab.index_of(term);
  return information_gain(vocab.doc_freq(i), vocab.total_docs());
}

inline std::vector<double> information_gains(const Vocabulary& vocab) {
  std::vector<double> out(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i) out[i] = information_gain(vocab.doc_freq(i), vocab.total_docs());
  return out;
}

// Term indices ordered by decreasing IG, ties by term.
inline std::vector<std::size_t> rank_by_information_gain(const Vocabulary& vocab) {
  auto ig = information_gains(vocab);
  std::vector<std::size_t> order(vocab.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ig[a] > ig[b]; });
  return order;  // vocab indices are already lexicographic, so stability settles ties
}

// Keeps the n most informative terms, re-indexed in lexicographic order.
inline Vocabulary select_features(const Vocabulary& vocab, std::size_t n) {
  if (n > vocab.size())
    fail(Errc::n_too_large, "requested " + std::to_string(n) + " features from a vocabulary of " + std::to_string(vocab.size()));
  auto order = rank_by_information_gain(vocab);
  std::vector<std::pair<std::string, ClassCounts>> kept;
  kept.reserve(n);
  for (std::size_t r = 0; r < n; ++r) kept.emplace_back(vocab.term(order[r]), vocab.doc_freq(order[r]));
  return Vocabulary(std::move(kept), vocab.total_docs());
}

inline FeatureVector vectorize(const TokenizedEmail& email, const Vocabulary& vocab,
                               TermWeighting weighting = TermWeighting::counts) {
  FeatureVector fv{std::vector<std::uint32_t>(vocab.size(), 0)};
  for (const auto& tok : email.tokens)
    if (auto i = vocab.find(tok)) {
      if (weighting == TermWeighting::binary) fv.counts[*i] = 1;
      else ++fv.counts[*i];
    }
  return fv;
}

// Plain-text vocabulary artifact: header, then one "term<TAB>df_ham<TAB>df_spam<TAB>ig" line per term.
inline std::string serialize_vocabulary(const Vocabulary& vocab) {
  std::ostringstream out;
  out << "format_version: 1\nkind: vocabulary\n";
  out << "docs_ham: " << vocab.total_docs()[0] << "\ndocs_spam: " << vocab.total_docs()[1] << "\n";
  out << "terms: " << vocab.size() << "\n";
  auto ig = information_gains(vocab);
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    out << vocab.term(i) << '\t' << vocab.doc_freq(i)[0] << '\t' << vocab.doc_freq(i)[1] << '\t'
        << std::fixed << std::setprecision(9) << ig[i] << '\n';
  }
  return out.str();
}

namespace detail {
inline std::string expect_header(std::istream& in, std::string_view key) {
  std::string line;
  if (!std::getline(in, line)) fail(Errc::parse_error, "missing header '" + std::string(key) + "'");
  std::string prefix = std::string(key) + ": ";
  if (line.rfind(prefix, 0) != 0) fail(Errc::parse_error, "expected header '" + std::string(key) + "'");
  return line.substr(prefix.size());
}
inline std::uint64_t parse_u64(const std::string& s) {
  if (s.empty() || s.size() > 19 || s.find_first_not_of("0123456789") != std::string::npos)
    fail(Errc::parse_error, "expected unsigned integer, got '" + s + "'");
  return std::stoull(s);
}
}  // namespace detail

inline Vocabulary parse_vocabulary(const std::string& text) {
  std::istringstream in(text);
  if (detail::expect_header(in, "format_version") != "1") fail(Errc::parse_error, "unsupported vocabulary version");
  if (detail::expect_header(in, "kind") != "vocabulary") fail(Errc::parse_error, "not a vocabulary file");
  ClassCounts totals{static_cast<std::uint32_t>(detail::parse_u64(detail::expect_header(in, "docs_ham"))),
                     static_cast<std::uint32_t>(detail::parse_u64(detail::expect_header(in, "docs_spam")))};
  auto count = detail::parse_u64(detail::expect_header(in, "terms"));
  std::vector<std::pair<std::string, ClassCounts>> entries;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string term, a, b, ig;
    if (!std::getline(row, term, '\t') || !std::getline(row, a, '\t') || !std::getline(row, b, '\t'))
      fail(Errc::parse_error, "malformed vocabulary row");
    entries.emplace_back(term, ClassCounts{static_cast<std::uint32_t>(detail::parse_u64(a)),
                                           static_cast<std::uint32_t>(detail::parse_u64(b))});
  }
  if (entries.size() != count) fail(Errc::parse_error, "vocabulary term count mismatch");
  return Vocabulary(std::move(entries), totals);
}

}  // namespace fespam::text
