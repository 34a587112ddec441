// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// End-to-end leakage experiment on the synthetic dual-label corpus:
// train the network on the public task, measure what an adversary learns
// from the encrypted part's output, apply collateral training per alpha,
// then run the recovery phase.

#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "fespam/common/digest.hpp"
#include "fespam/leakage/collateral.hpp"
#include "fespam/leakage/labels.hpp"
#include "fespam/nn/quadnet.hpp"
#include "fespam/text/corpus.hpp"
#include "fespam/text/split.hpp"
#include "fespam/text/synthetic.hpp"

namespace fespam::leakage {

inline text::DualLabelConfig leakage_corpus_defaults() {
  text::DualLabelConfig c;
  c.private_rate = 0.5;
  return c;
}

inline HeadConfig leakage_adversary_defaults() {
  auto c = adversary_defaults();
  c.epochs = 200;
  return c;
}

struct ExperimentConfig {
  text::DualLabelConfig corpus = leakage_corpus_defaults();
  std::size_t features = 0;  // 0 keeps the whole vocabulary
  double split_ratio = 0.7;
  std::uint64_t seed = 1;
  nn::Hyper hyper;
  nn::TrainConfig network{.epochs = 15, .learning_rate = 0.02};
  HeadConfig adversary = leakage_adversary_defaults();
  HeadConfig public_head = public_head_defaults();
  CollateralConfig collateral;
  // Collateral phases; before every phase after the first, a fresh
  // adversary is fitted to the current outputs and frozen for that phase.
  std::size_t rounds = 8;
  // Recovery heads use fresh seeds derived from these offsets.
  std::uint64_t recovery_seed_offset = 1000;
};

struct Experiment {
  ExperimentConfig config;
  DualSplit data;
  nn::QuadNetParams network;  // trained on the public task
  Head public_head;           // frozen clone of the plaintext part
  AdversaryResult adversary;  // against the original encrypted part
  double public_accuracy = 0;
  double private_majority = 0;
  double label_mi_bits = 0;
};

// Corpus -> features -> split stratified on (public, private) jointly.
inline DualSplit prepare_dual_split(const ExperimentConfig& cfg) {
  auto dual = text::generate_dual_label_corpus(cfg.corpus);
  std::vector<text::TokenizedEmail> corpus;
  std::vector<int> pri;
  for (std::size_t i = 0; i < dual.emails.size(); ++i) {
    auto r = text::preprocess(dual.emails[i]);
    if (!r.email) continue;
    corpus.push_back(std::move(*r.email));
    pri.push_back(dual.private_labels[i]);
  }
  require(!corpus.empty(), Errc::empty_corpus, "dual-label corpus produced no usable documents");
  auto vocab = text::build_vocabulary(corpus);
  if (cfg.features) vocab = text::select_features(vocab, cfg.features);

  std::vector<int> strata;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    strata.push_back(static_cast<int>(corpus[i].label) * static_cast<int>(dual.private_classes) + pri[i]);
  auto idx = text::stratified_split(strata, cfg.split_ratio, cfg.seed);
  DualSplit out;
  out.private_classes = dual.private_classes;
  out.n = vocab.size();
  auto make = [&](std::size_t i) {
    return DualExample{nn::make_input(text::vectorize(corpus[i], vocab)), static_cast<std::size_t>(corpus[i].label),
                       static_cast<std::size_t>(pri[i])};
  };
  for (auto i : idx.train) out.train.push_back(make(i));
  for (auto i : idx.test) out.test.push_back(make(i));
  return out;
}

inline double public_accuracy(const nn::QuadNetParams& p, std::span<const DualExample> data) {
  if (data.empty()) return 0;
  std::size_t ok = 0;
  nn::FeCache c;
  for (const auto& d : data) {
    nn::forward_fe(p.fe, d.x, c);
    ok += static_cast<std::size_t>(nn::predict_from_q(p.plain, c.q).label) == d.pub;
  }
  return static_cast<double>(ok) / static_cast<double>(data.size());
}

inline Experiment run_baseline(const ExperimentConfig& cfg) {
  Experiment e;
  e.config = cfg;
  e.data = prepare_dual_split(cfg);
  auto hyper = cfg.hyper;
  hyper.n = e.data.n;
  e.network = nn::init_quadnet(hyper, cfg.network.seed);
  std::vector<nn::Example> pub_train;
  for (const auto& d : e.data.train) pub_train.push_back({d.x, d.pub});
  nn::fit(e.network, pub_train, cfg.network);
  e.public_accuracy = public_accuracy(e.network, e.data.test);
  e.public_head = public_head_from(e.network);
  e.adversary = train_adversary(e.network.fe, e.data, cfg.adversary);

  std::vector<int> a, b;
  for (const auto* part : {&e.data.train, &e.data.test})
    for (const auto& d : *part) {
      a.push_back(static_cast<int>(d.pub));
      b.push_back(static_cast<int>(d.pri));
    }
  e.label_mi_bits = mutual_information_bits(a, b);
  e.private_majority = majority_rate(std::vector<int>(b.begin() + static_cast<std::ptrdiff_t>(e.data.train.size()), b.end()));
  return e;
}

inline HeadConfig reseeded(HeadConfig c, std::uint64_t offset) {
  c.seed += offset;
  return c;
}

struct DefenseResult {
  double alpha = 0;
  nn::EncryptedPart fe;
  RecoveryResult recovery;
  CollateralReport report;
};

inline DefenseResult run_defense(const Experiment& e, double alpha) {
  auto cc = e.config.collateral;
  cc.alpha = alpha;
  DefenseResult r;
  r.alpha = alpha;
  r.fe = e.network.fe;
  for (std::size_t round = 0; round < std::max<std::size_t>(1, e.config.rounds); ++round) {
    Head adv = e.adversary.head;
    if (round > 0) {
      auto out = fe_outputs(r.fe, e.data.train);
      adv = train_head(out, private_labels(e.data.train), e.data.private_classes, nn::LossKind::softmax_ce,
                       reseeded(e.config.adversary, 100 + round));
    }
    cc.seed = e.config.collateral.seed + round;
    r.fe = collateral_train(r.fe, e.public_head, adv, e.data.train, cc, &r.report);
  }
  r.recovery = recovery_eval(r.fe, e.data, reseeded(e.config.public_head, e.config.recovery_seed_offset),
                             reseeded(e.config.adversary, e.config.recovery_seed_offset));
  return r;
}

struct SweepRow {
  double alpha = 0;
  double pub_acc = 0;
  double adv_acc = 0;
  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
};

inline const std::vector<double>& default_alphas() {
  static const std::vector<double> a{0, 0.25, 0.5, 1, 2, 4};
  return a;
}

inline SweepTable alpha_sweep(const Experiment& e, std::span<const double> alphas) {
  require(!alphas.empty(), Errc::invalid_argument, "alpha list is empty");
  for (double a : alphas) require(a >= 0 && std::isfinite(a), Errc::invalid_argument, "alpha must be non-negative");
  SweepTable t;
  t.seed = e.config.seed;
  t.epochs = e.config.collateral.epochs * std::max<std::size_t>(1, e.config.rounds);
  for (double a : alphas) {
    auto r = run_defense(e, a);
    t.rows.push_back({a, r.recovery.pub_acc, r.recovery.adv_acc});
  }
  return t;
}

// Tab-separated, one row per alpha.
inline std::string render_sweep(const SweepTable& t) {
  std::ostringstream out;
  out << "alpha\tpub_acc\tadv_acc\tseed\tepochs\n";
  out << std::setprecision(6);
  for (const auto& r : t.rows) out << r.alpha << '\t' << r.pub_acc << '\t' << r.adv_acc << '\t' << t.seed << '\t' << t.epochs << '\n';
  return out.str();
}

// Everything needed to rerun the sweep, as key = value lines.
inline std::string render_manifest(const ExperimentConfig& c, std::span<const double> alphas) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "format_version = 1\n";
  out << "seed = " << c.seed << "\n";
  out << "corpus.documents = " << c.corpus.documents << "\n";
  out << "corpus.private_classes = " << c.corpus.private_classes << "\n";
  out << "corpus.public_rate = " << c.corpus.public_rate << "\n";
  out << "corpus.private_rate = " << c.corpus.private_rate << "\n";
  out << "corpus.seed = " << c.corpus.seed << "\n";
  out << "features = " << c.features << "\n";
  out << "split_ratio = " << c.split_ratio << "\n";
  out << "network.epochs = " << c.network.epochs << "\n";
  out << "network.learning_rate = " << c.network.learning_rate << "\n";
  out << "network.seed = " << c.network.seed << "\n";
  auto head = [&](const char* name, const HeadConfig& h) {
    out << name << ".hidden =";
    for (auto w : h.hidden) out << ' ' << w;
    out << "\n" << name << ".epochs = " << h.epochs << "\n" << name << ".learning_rate = " << h.learning_rate << "\n"
        << name << ".seed = " << h.seed << "\n";
  };
  head("adversary", c.adversary);
  head("public_head", c.public_head);
  out << "collateral.epochs = " << c.collateral.epochs << "\n";
  out << "collateral.learning_rate = " << c.collateral.learning_rate << "\n";
  out << "collateral.clip_norm = " << c.collateral.clip_norm << "\n";
  out << "collateral.seed = " << c.collateral.seed << "\n";
  out << "rounds = " << c.rounds << "\n";
  out << "recovery_seed_offset = " << c.recovery_seed_offset << "\n";
  out << "alphas =";
  for (double a : alphas) out << ' ' << a;
  out << "\n";
  return out.str();
}

// Seed-shifted copy so one config drives several independent runs.
inline ExperimentConfig with_seed(ExperimentConfig c, std::uint64_t seed) {
  c.seed = seed;
  c.network.seed = seed;
  c.corpus.seed = 10 + seed;
  c.adversary.seed = seed * 7 + 1;
  c.public_head.seed = seed * 7 + 2;
  c.collateral.seed = seed * 7 + 3;
  return c;
}

}  // namespace fespam::leakage
