// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "fespam/common/random.hpp"
#include "fespam/text/preprocess.hpp"

namespace fespam::text {

// Pronounceable pseudo-words that are fixed points of the stemmer, so a
// generated token survives preprocessing unchanged.
inline std::vector<std::string> make_lexicon(std::size_t count, std::uint64_t seed) {
  static constexpr std::string_view kOnset = "bdfgkmnprtvz";
  static constexpr std::string_view kVowel = "aiou";
  Rng rng(seed);
  std::set<std::string> seen;
  std::vector<std::string> out;
  while (out.size() < count) {
    std::string w;
    auto syllables = 2 + rng.below(2);
    for (std::uint64_t s = 0; s < syllables; ++s) {
      w += kOnset[rng.below(kOnset.size())];
      w += kVowel[rng.below(kVowel.size())];
    }
    w += kOnset[rng.below(kOnset.size())];
    if (porter_stem(w) != w || !seen.insert(w).second) continue;
    out.push_back(std::move(w));
  }
  return out;
}

struct SpamCorpusConfig {
  std::size_t emails = 2000;
  double spam_fraction = 0.4;
  std::size_t background_terms = 600;
  std::size_t indicative_terms = 80;  // per class
  std::size_t min_length = 15;
  std::size_t max_length = 90;
  double signal_rate = 0.20;      // share of tokens from the own class's indicative set
  double cross_rate = 0.03;       // share from the other class's set
  std::uint64_t seed = 7;
};

namespace detail {
inline std::vector<double> zipf_weights(std::size_t n, double s = 1.0) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / std::pow(static_cast<double>(i + 1), s);
  return w;
}
}  // namespace detail

// Two-class corpus with a shared Zipfian background and class-indicative
// vocabularies; a stand-in when no public spam corpus is available.
inline std::vector<RawEmail> generate_spam_corpus(const SpamCorpusConfig& cfg) {
  auto lex = make_lexicon(cfg.background_terms + 2 * cfg.indicative_terms, cfg.seed ^ 0x5eed);
  std::vector<std::string> background(lex.begin(), lex.begin() + static_cast<std::ptrdiff_t>(cfg.background_terms));
  std::vector<std::vector<std::string>> indicative(2);
  for (std::size_t c = 0; c < 2; ++c) {
    auto first = lex.begin() + static_cast<std::ptrdiff_t>(cfg.background_terms + c * cfg.indicative_terms);
    indicative[c].assign(first, first + static_cast<std::ptrdiff_t>(cfg.indicative_terms));
  }
  auto bg_w = detail::zipf_weights(background.size());
  auto ind_w = detail::zipf_weights(cfg.indicative_terms, 0.7);

  Rng rng(cfg.seed);
  std::vector<RawEmail> out;
  out.reserve(cfg.emails);
  for (std::size_t e = 0; e < cfg.emails; ++e) {
    Label label = rng.bernoulli(cfg.spam_fraction) ? Label::spam : Label::ham;
    auto c = static_cast<std::size_t>(label);
    auto len = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(cfg.min_length),
                                                    static_cast<std::int64_t>(cfg.max_length)));
    RawEmail raw;
    raw.id = "syn-" + std::to_string(e);
    raw.label = label;
    for (std::size_t k = 0; k < len; ++k) {
      double u = rng.uniform();
      const std::string* w;
      if (u < cfg.signal_rate) w = &indicative[c][rng.categorical(ind_w)];
      else if (u < cfg.signal_rate + cfg.cross_rate) w = &indicative[1 - c][rng.categorical(ind_w)];
      else w = &background[rng.categorical(bg_w)];
      (k == 0 ? raw.subject : raw.body) += (k > 1 ? " " : "") + *w;
    }
    out.push_back(std::move(raw));
  }
  return out;
}

struct DualLabelConfig {
  std::size_t documents = 3000;
  std::size_t private_classes = 3;
  std::size_t background_terms = 300;
  std::size_t public_terms = 40;   // per public class
  std::size_t private_terms = 40;  // per private class
  std::size_t min_length = 20;
  std::size_t max_length = 60;
  double public_rate = 0.15;
  double private_rate = 0.25;
  std::uint64_t seed = 11;
};

struct DualLabelCorpus {
  std::vector<RawEmail> emails;  // label = public label
  std::vector<int> private_labels;
  std::size_t private_classes = 0;
};

// Public and private labels are drawn independently; each plants its own
// token distribution, so the private label is learnable from the text but
// carries no information about the public one.
inline DualLabelCorpus generate_dual_label_corpus(const DualLabelConfig& cfg) {
  auto lex = make_lexicon(cfg.background_terms + 2 * cfg.public_terms + cfg.private_classes * cfg.private_terms,
                          cfg.seed ^ 0xd0a1);
  std::size_t pos = 0;
  auto take = [&](std::size_t n) {
    std::vector<std::string> v(lex.begin() + static_cast<std::ptrdiff_t>(pos), lex.begin() + static_cast<std::ptrdiff_t>(pos + n));
    pos += n;
    return v;
  };
  auto background = take(cfg.background_terms);
  std::vector<std::vector<std::string>> pub{take(cfg.public_terms), take(cfg.public_terms)};
  std::vector<std::vector<std::string>> pri;
  for (std::size_t c = 0; c < cfg.private_classes; ++c) pri.push_back(take(cfg.private_terms));
  auto bg_w = detail::zipf_weights(background.size());
  auto pub_w = detail::zipf_weights(cfg.public_terms, 0.5);
  auto pri_w = detail::zipf_weights(cfg.private_terms, 0.5);

  Rng rng(cfg.seed);
  DualLabelCorpus out;
  out.private_classes = cfg.private_classes;
  for (std::size_t d = 0; d < cfg.documents; ++d) {
    auto pub_label = rng.below(2);
    auto pri_label = rng.below(cfg.private_classes);
    auto len = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(cfg.min_length),
                                                    static_cast<std::int64_t>(cfg.max_length)));
    RawEmail raw;
    raw.id = "dual-" + std::to_string(d);
    raw.label = static_cast<Label>(pub_label);
    for (std::size_t k = 0; k < len; ++k) {
      double u = rng.uniform();
      const std::string* w;
      if (u < cfg.public_rate) w = &pub[pub_label][rng.categorical(pub_w)];
      else if (u < cfg.public_rate + cfg.private_rate) w = &pri[pri_label][rng.categorical(pri_w)];
      else w = &background[rng.categorical(bg_w)];
      if (k) raw.body += ' ';
      raw.body += *w;
    }
    out.emails.push_back(std::move(raw));
    out.private_labels.push_back(static_cast<int>(pri_label));
  }
  return out;
}

}  // namespace fespam::text
