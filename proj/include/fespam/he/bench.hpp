// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Timing sweep for the HE baseline over feature counts. A prediction is
// model encryption + client scoring + owner decryption; the two network
// hops are recorded as zero because everything runs on one host.

#include <algorithm>
#include <span>
#include <vector>

#include "fespam/common/random.hpp"
#include "fespam/common/timer.hpp"
#include "fespam/he/lr.hpp"
#include "fespam/text/split.hpp"
#include "fespam/text/vocabulary.hpp"

namespace fespam::he {

struct HeBenchOptions {
  unsigned key_bits = kRealKeyBits;
  unsigned scale_bits = kDefaultScaleBits;
  LRConfig lr;
  std::size_t emails_per_size = 20;
  double split_ratio = 0.7;
  std::uint64_t seed = 1;
  text::TermWeighting weighting = text::TermWeighting::counts;
};

struct HeBenchRow {
  std::size_t n = 0;
  double encrypt_seconds = 0;   // whole-model encryption, one-off per model
  double score_seconds = 0;     // per email, mean
  double decrypt_seconds = 0;   // per email, mean
  double network_seconds = 0;   // always 0 on a single host
  double plain_accuracy = 0;
  double encrypted_accuracy = 0;
  std::size_t mismatches = 0;   // HE label != plaintext LR label
  std::size_t emails = 0;

  // Per-email prediction: client scoring, owner decryption, two hops.
  double predict_seconds() const { return score_seconds + decrypt_seconds + network_seconds; }
};

struct HeBenchReport {
  std::vector<HeBenchRow> rows;
};

inline std::vector<text::LabeledVector> vectorize_all(std::span<const text::TokenizedEmail> corpus,
                                                      const text::Vocabulary& vocab, text::TermWeighting weighting) {
  std::vector<text::LabeledVector> out;
  out.reserve(corpus.size());
  for (const auto& e : corpus) out.push_back({e.id, text::vectorize(e, vocab, weighting), e.label});
  return out;
}

inline HeBenchReport bench_roundtrip(std::span<const text::TokenizedEmail> corpus, const text::Vocabulary& vocab,
                                     std::span<const std::size_t> sizes, const HeBenchOptions& opt = {}) {
  HeBenchReport report;
  if (sizes.empty()) return report;
  auto rs = RandomSource::seeded(opt.seed);
  // Key generation is a one-off owner cost and stays outside the timings.
  auto keys = paillier_keygen(opt.key_bits, rs);
  for (std::size_t n : sizes) {
    auto features = text::select_features(vocab, n);
    auto data = vectorize_all(corpus, features, opt.weighting);
    auto sp = text::split(data, opt.split_ratio, opt.seed);
    auto model = train_lr(sp, opt.lr);

    HeBenchRow row;
    row.n = n;
    row.plain_accuracy = lr_accuracy(model, sp.test);
    Stopwatch sw;
    auto em = encrypt_model(keys.pub, model, opt.scale_bits, rs);
    row.encrypt_seconds = sw.seconds();

    const std::size_t m = std::min(opt.emails_per_size, sp.test.size());
    std::size_t correct = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const auto& d = sp.test[i];
      sw.reset();
      auto c = client_score(em, d.x.counts);
      row.score_seconds += sw.seconds();
      sw.reset();
      auto p = owner_decrypt_and_predict(keys, c, em.scale_bits);
      row.decrypt_seconds += sw.seconds();
      correct += p.label == d.label;
      row.mismatches += p.label != lr_predict(model, d.x);
    }
    row.emails = m;
    if (m) {
      row.score_seconds /= static_cast<double>(m);
      row.decrypt_seconds /= static_cast<double>(m);
      row.encrypted_accuracy = static_cast<double>(correct) / static_cast<double>(m);
    }
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace fespam::he
