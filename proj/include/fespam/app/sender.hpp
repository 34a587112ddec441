// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Sender side: turn an email into the feature vector the model expects and
// encrypt it under the master public key. The sender's client is trusted
// to featurize honestly; nothing downstream can check that.

#include <algorithm>
#include <string>

#include "fespam/app/config.hpp"
#include "fespam/common/timer.hpp"
#include "fespam/fe/scheme.hpp"
#include "fespam/text/corpus.hpp"

namespace fespam::app {

struct Featurized {
  text::FeatureVector x;
  std::size_t tokens = 0;
  std::size_t clamped = 0;  // entries cut down to x_max
};

// Counts above x_max are saturated: the scheme only admits [0, x_max].
// Training and the plaintext path use the same function.
inline Featurized featurize(const text::TokenizedEmail& e, const text::Vocabulary& features, const PipelineConfig& cfg) {
  Featurized f;
  f.tokens = e.tokens.size();
  f.x = text::vectorize(e, features, cfg.term_weighting());
  for (auto& v : f.x.counts)
    if (v > cfg.x_max) {
      v = cfg.x_max;
      ++f.clamped;
    }
  return f;
}

// A single message has no length filter: every email must be classifiable.
inline text::TokenizedEmail tokenize_message(const std::string& id, const std::string& content) {
  auto raw = text::parse_message(id, content, text::Label::ham);
  text::PreprocessOptions opts;
  opts.min_tokens = 0;
  opts.max_tokens = SIZE_MAX;
  return std::move(*text::preprocess(raw, opts).email);
}

inline RandomSource encryption_randomness(const PipelineConfig& cfg, std::string_view content) {
  if (cfg.randomness == "os") return RandomSource::os();
  Sha256 h;
  h.update("fespam-encrypt");
  h.update(std::to_string(cfg.seed));
  h.update(content);
  auto d = h.finish();
  std::uint64_t s = 0;
  for (int i = 0; i < 8; ++i) s |= std::uint64_t{d[static_cast<std::size_t>(i)]} << (8 * i);
  return RandomSource::seeded(s);
}

struct SealedEmail {
  fe::Ciphertext ct;
  Featurized features;
  double encrypt_seconds = 0;
};

inline SealedEmail encrypt_message(const fe::PublicKey& mpk, const text::Vocabulary& features, const PipelineConfig& cfg,
                                   const std::string& id, const std::string& content) {
  require(mpk.n() == features.size(), Errc::dimension_mismatch,
          "public key is for n = " + std::to_string(mpk.n()) + ", vocabulary has " + std::to_string(features.size()));
  SealedEmail out;
  out.features = featurize(tokenize_message(id, content), features, cfg);
  auto rs = encryption_randomness(cfg, content);
  Stopwatch sw;
  out.ct = fe::encrypt(mpk, std::span<const std::uint32_t>(out.features.x.counts), rs);
  out.encrypt_seconds = sw.seconds();
  return out;
}

}  // namespace fespam::app
