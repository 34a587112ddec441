// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Pipeline commands. Each reads its inputs through the workspace manifest,
// writes its outputs back through it and returns a small result struct
// the CLI renders.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fespam/app/artifacts.hpp"
#include "fespam/app/bench.hpp"
#include "fespam/app/classifier.hpp"
#include "fespam/app/config.hpp"
#include "fespam/app/sender.hpp"
#include "fespam/leakage/experiment.hpp"
#include "fespam/nn/model_file.hpp"
#include "fespam/text/corpus.hpp"
#include "fespam/text/split.hpp"
#include "fespam/text/synthetic.hpp"

namespace fespam::app {

// ------------------------------------------------------------- prepare

struct PrepareResult {
  text::PrepareReport report;
  std::size_t vocabulary = 0;  // distinct terms in the training emails
  std::size_t features = 0;
  std::size_t train = 0;
  std::size_t test = 0;
};

inline std::vector<text::RawEmail> load_raw(const PipelineConfig& cfg) {
  if (cfg.dataset == "synthetic") {
    text::SpamCorpusConfig sc;
    sc.emails = cfg.synthetic_emails;
    sc.seed = cfg.synthetic_seed;
    sc.background_terms = cfg.synthetic_background_terms;
    return text::generate_spam_corpus(sc);
  }
  return text::load_dataset(cfg.dataset);
}

inline text::IndexSplit split_indices(std::span<const text::TokenizedEmail> corpus, const PipelineConfig& cfg) {
  std::vector<int> labels;
  for (const auto& e : corpus) labels.push_back(static_cast<int>(e.label));
  return text::stratified_split(labels, cfg.split_ratio, cfg.split_seed);
}

inline std::string render_split(std::span<const text::TokenizedEmail> corpus, const text::IndexSplit& idx,
                                const PipelineConfig& cfg) {
  text::DatasetSplit ds;
  ds.seed = cfg.split_seed;
  ds.ratio = cfg.split_ratio;
  for (auto i : idx.train) ds.train.push_back({corpus[i].id, {}, corpus[i].label});
  for (auto i : idx.test) ds.test.push_back({corpus[i].id, {}, corpus[i].label});
  return text::serialize_split(ds);
}

// Features are ranked on the training emails only.
inline text::Vocabulary training_vocabulary(std::span<const text::TokenizedEmail> corpus, const text::IndexSplit& idx) {
  std::vector<text::TokenizedEmail> train;
  train.reserve(idx.train.size());
  for (auto i : idx.train) train.push_back(corpus[i]);
  return text::build_vocabulary(train);
}

inline PrepareResult cmd_prepare(Workspace& ws) {
  const auto& cfg = ws.config();
  PrepareResult r;
  auto raw = load_raw(cfg);
  auto corpus = text::preprocess_all(raw, r.report);
  require(!corpus.empty(), Errc::empty_corpus, "every email was rejected by preprocessing");
  auto idx = split_indices(corpus, cfg);
  auto vocab = training_vocabulary(corpus, idx);
  auto features = text::select_features(vocab, cfg.features);
  r.vocabulary = vocab.size();
  r.features = features.size();
  r.train = idx.train.size();
  r.test = idx.test.size();
  ws.write(artifact::corpus, text::serialize_corpus(corpus), "prepare");
  ws.write(artifact::split, render_split(corpus, idx, cfg), "prepare", {artifact::corpus});
  ws.write(artifact::vocabulary, text::serialize_vocabulary(vocab), "prepare", {artifact::corpus, artifact::split});
  ws.write(artifact::features, text::serialize_vocabulary(features), "prepare", {artifact::vocabulary});
  return r;
}

// Prepared data, re-derived and cross-checked against the stored split.
struct Prepared {
  std::vector<text::TokenizedEmail> corpus;
  text::Vocabulary vocabulary;
  text::Vocabulary features;
  text::IndexSplit split;
};

inline Prepared load_prepared(const Workspace& ws) {
  Prepared p;
  for (const char* name : {artifact::split, artifact::vocabulary, artifact::features}) ws.check_inputs(name);
  p.corpus = text::parse_corpus(ws.read_text(artifact::corpus));
  p.vocabulary = text::parse_vocabulary(ws.read_text(artifact::vocabulary));
  p.features = text::parse_vocabulary(ws.read_text(artifact::features));
  p.split = split_indices(p.corpus, ws.config());
  require(render_split(p.corpus, p.split, ws.config()) == ws.read_text(artifact::split), Errc::digest_mismatch,
          "stored split does not match the corpus and split settings");
  require(p.features.size() == ws.config().features, Errc::digest_mismatch, "feature file does not match the config");
  return p;
}

inline text::DatasetSplit vectorized_split(const Prepared& p, const PipelineConfig& cfg) {
  text::DatasetSplit ds;
  ds.seed = cfg.split_seed;
  ds.ratio = cfg.split_ratio;
  auto vec = [&](std::size_t i) {
    return text::LabeledVector{p.corpus[i].id, featurize(p.corpus[i], p.features, cfg).x, p.corpus[i].label};
  };
  for (auto i : p.split.train) ds.train.push_back(vec(i));
  for (auto i : p.split.test) ds.test.push_back(vec(i));
  return ds;
}

// --------------------------------------------------------------- train

struct TrainResult {
  double train_accuracy = 0;
  double test_accuracy = 0;
  std::vector<double> epoch_loss;
};

inline nn::TrainConfig train_config(const PipelineConfig& cfg) {
  nn::TrainConfig tc;
  tc.epochs = cfg.train_epochs;
  tc.learning_rate = cfg.learning_rate;
  tc.seed = cfg.seed;
  return tc;
}

inline TrainResult cmd_train(Workspace& ws) {
  const auto& cfg = ws.config();
  auto p = load_prepared(ws);
  auto ds = vectorized_split(p, cfg);
  nn::TrainReport tr;
  nn::ModelBundle m;
  m.params = nn::train(ds, train_config(cfg), &tr);
  m.train_seed = cfg.seed;
  m.config_digest = ws.config_hex();
  m.weighting = cfg.weighting;
  TrainResult r{nn::accuracy(m.params, ds.train), nn::accuracy(m.params, ds.test), tr.epoch_loss};
  ws.write(artifact::model, nn::serialize_model(m), "train", {artifact::corpus, artifact::split, artifact::features});
  return r;
}

inline nn::ModelBundle load_model(const Workspace& ws) {
  ws.check_inputs(artifact::model);
  auto m = nn::parse_model(ws.read_text(artifact::model));
  require(m.config_digest == ws.config_hex(), Errc::digest_mismatch, "model was trained under a different config");
  return m;
}

// ------------------------------------------------------------ quantize

struct QuantizeResult {
  int bit_width = 8;
  double float_accuracy = 0;
  double quantized_accuracy = 0;
  std::uint64_t max_bound = 0;
};

inline double quantized_accuracy(const nn::QuadNetParams& params, const nn::QuantizedEncryptedPart& qp,
                                 std::span<const text::LabeledVector> data) {
  if (data.empty()) return 0;
  std::size_t ok = 0;
  for (const auto& d : data)
    ok += nn::predict_from_intermediate(nn::forward_encryptedpart_int(d.x, qp), qp, params.plain).label == d.label;
  return static_cast<double>(ok) / static_cast<double>(data.size());
}

inline QuantizeResult cmd_quantize(Workspace& ws) {
  const auto& cfg = ws.config();
  auto m = load_model(ws);
  auto p = load_prepared(ws);
  auto ds = vectorized_split(p, cfg);
  m.quantized = nn::quantize(m.params, cfg.bit_width);
  QuantizeResult r{cfg.bit_width, nn::accuracy(m.params, ds.test), quantized_accuracy(m.params, *m.quantized, ds.test),
                   fe::max_certified_bound(*m.quantized, cfg.x_max)};
  ws.write(artifact::model, nn::serialize_model(m), "quantize", {artifact::corpus, artifact::split, artifact::features});
  return r;
}

// -------------------------------------------------------------- keygen

struct KeygenResult {
  std::size_t keys = 0;
  std::uint64_t max_bound = 0;
  std::uint64_t table_entries = 0;
  std::string mpk_digest;
};

// Baby steps worth storing: never more than the widest bound can use.
inline std::uint64_t table_size_for(std::uint64_t bound, std::uint64_t wanted) {
  if (bound >= (std::uint64_t{1} << 62)) return wanted;
  return std::min(wanted, 2 * bound + 1);
}

inline KeygenResult cmd_keygen(Workspace& ws) {
  const auto& cfg = ws.config();
  auto m = load_model(ws);
  require(m.quantized.has_value(), Errc::invalid_argument, "model has not been quantized; run quantize first");
  const auto& qp = *m.quantized;
  KeygenResult r;
  r.max_bound = fe::max_certified_bound(qp, cfg.x_max);
  if (r.max_bound > cfg.dlog_capacity)
    fail(Errc::bound_overflow, "certified bound " + std::to_string(r.max_bound) + " exceeds dlog capacity " +
                                   std::to_string(cfg.dlog_capacity) + "; lower bit_width (now " +
                                   std::to_string(cfg.bit_width) + "), features (now " + std::to_string(cfg.features) +
                                   ") or x_max (now " + std::to_string(cfg.x_max) + ")");
  std::optional<std::uint64_t> seed;
  if (cfg.randomness == "seeded") seed = cfg.seed;
  auto keys = fe::setup(qp.n(), {cfg.backend, cfg.curve, cfg.x_max}, seed);
  auto fks = fe::derive_keys(keys.msk, qp, {cfg.dlog_capacity});
  ws.write(artifact::mpk, keys.mpk.serialize(), "keygen", {artifact::model});
  ws.write(artifact::msk, keys.msk.serialize(), "keygen", {artifact::model, artifact::mpk});
  for (const auto& k : fks) ws.write(artifact::key(k.index), k.serialize(), "keygen", {artifact::model, artifact::mpk});
  r.keys = fks.size();
  r.mpk_digest = to_hex(keys.mpk.digest());

  r.table_entries = table_size_for(r.max_bound, cfg.table_entries);
  require(r.table_entries <= cfg.table_budget_bytes / fe::DlogTable<fe::Gt>::kEntryBytes, Errc::disk_budget_exceeded,
          "table of " + std::to_string(r.table_entries) + " entries exceeds table_budget_bytes");
  Bytes table = cfg.backend == fe::Backend::pairing
                    ? fe::DlogTable<fe::Gt>::build(fe::Gt::generator(), r.table_entries).serialize()
                    : fe::DlogTable<fe::OracleElem>::build(fe::OracleElem::generator(), r.table_entries).serialize();
  ws.write(artifact::table, table, "keygen");
  return r;
}

// ------------------------------------------------------------- encrypt

struct EncryptResult {
  std::string id;
  std::size_t tokens = 0;
  std::size_t nonzero = 0;
  std::size_t clamped = 0;
  double encrypt_seconds = 0;
  std::string ciphertext_sha256;
};

struct SenderState {
  fe::PublicKey mpk;
  text::Vocabulary features;
};

// What a sender's client holds: the public key and the feature list.
inline SenderState load_sender_state(const Workspace& ws) {
  ws.check_inputs(artifact::mpk);
  return {fe::PublicKey::parse(ws.read(artifact::mpk)), text::parse_vocabulary(ws.read_text(artifact::features))};
}

inline std::string email_id(const fs::path& p) { return p.filename().string(); }

inline EncryptResult cmd_encrypt(const Workspace& ws, const fs::path& email, const fs::path& out) {
  auto s = load_sender_state(ws);
  auto content = fespam::read_text(email);
  auto sealed = encrypt_message(s.mpk, s.features, ws.config(), email_id(email), content);
  auto bytes = sealed.ct.serialize();
  write_binary(out, bytes);
  EncryptResult r;
  r.id = email_id(email);
  r.tokens = sealed.features.tokens;
  for (auto v : sealed.features.x.counts) r.nonzero += v != 0;
  r.clamped = sealed.features.clamped;
  r.encrypt_seconds = sealed.encrypt_seconds;
  r.ciphertext_sha256 = to_hex(sha256(bytes));
  return r;
}

// ------------------------------------------------------------ classify

// Reads only the ciphertext file and server-side artifacts.
inline ClassificationRecord cmd_classify(const Workspace& ws, const fs::path& ciphertext) {
  auto state = load_server_state(ws);
  auto id = ciphertext.stem().string();
  return classify(state, fe::Ciphertext::parse(read_binary(ciphertext)), id);
}

// --------------------------------------------------------------- bench

inline BenchReport cmd_bench(Workspace& ws, const BenchOptions& opt) {
  auto p = load_prepared(ws);
  auto rep = run_bench(p.corpus, p.vocabulary, p.split, ws.config(), opt);
  ws.write("bench.json", to_json(rep).dump(2) + "\n", "bench", {artifact::corpus, artifact::vocabulary, artifact::split});
  ws.write("bench.tsv", render_bench_tsv(rep), "bench", {artifact::corpus, artifact::vocabulary, artifact::split});
  return rep;
}

// -------------------------------------------------------------- attack

struct AttackRow {
  std::size_t rank = 0;
  std::string term;
  double majority = 0;   // held-out
  double adversary = 0;  // held-out
};

struct AttackResult {
  std::vector<AttackRow> rows;
};

// Word-presence adversaries against the trained encrypted part: for each
// of the top-k features, can the intermediate output tell whether the
// email contains it?
inline AttackResult cmd_attack(Workspace& ws, std::size_t k, const leakage::HeadConfig& adv = leakage::adversary_defaults()) {
  const auto& cfg = ws.config();
  auto m = load_model(ws);
  auto p = load_prepared(ws);
  auto tasks = leakage::word_presence_tasks(p.corpus, p.features, k);
  AttackResult r;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto& task = tasks[t];
    leakage::DualSplit data;
    data.private_classes = task.classes;
    data.n = p.features.size();
    auto make = [&](std::size_t i) {
      return leakage::DualExample{nn::make_input(featurize(p.corpus[i], p.features, cfg).x),
                                  static_cast<std::size_t>(p.corpus[i].label),
                                  static_cast<std::size_t>(task.labels[i])};
    };
    std::vector<int> test_labels;
    for (auto i : p.split.train) data.train.push_back(make(i));
    for (auto i : p.split.test) {
      data.test.push_back(make(i));
      test_labels.push_back(task.labels[i]);
    }
    auto a = leakage::train_adversary(m.params.fe, data, leakage::reseeded(adv, cfg.seed + t));
    r.rows.push_back({t, task.designated_term, leakage::majority_rate(test_labels), a.accuracy});
  }
  nlohmann::json j = nlohmann::json::array();
  for (const auto& row : r.rows)
    j.push_back({{"rank", row.rank}, {"term", row.term}, {"majority", row.majority}, {"adversary", row.adversary}});
  ws.write("attack.json", j.dump(2) + "\n", "attack", {artifact::model, artifact::corpus, artifact::features});
  return r;
}

// ------------------------------------------------------- defend / sweep

inline leakage::ExperimentConfig experiment_config(const PipelineConfig& cfg) {
  return leakage::with_seed(leakage::ExperimentConfig{}, cfg.seed);
}

struct DefendResult {
  double majority = 0;
  double public_before = 0;
  double adversary_before = 0;
  double label_mi_bits = 0;
  leakage::DefenseResult defense;
};

inline nlohmann::json to_json(const DefendResult& r) {
  return {{"private_majority", r.majority},
          {"label_mi_bits", r.label_mi_bits},
          {"alpha", r.defense.alpha},
          {"before", {{"public_accuracy", r.public_before}, {"adversary_accuracy", r.adversary_before}}},
          {"after", {{"public_accuracy", r.defense.recovery.pub_acc}, {"adversary_accuracy", r.defense.recovery.adv_acc}}}};
}

inline DefendResult cmd_defend(Workspace& ws, std::optional<leakage::ExperimentConfig> ec = std::nullopt) {
  auto e = leakage::run_baseline(ec.value_or(experiment_config(ws.config())));
  DefendResult r{e.private_majority, e.public_accuracy, e.adversary.accuracy, e.label_mi_bits,
                 leakage::run_defense(e, ws.config().alpha)};
  ws.write("defend.json", to_json(r).dump(2) + "\n", "defend");
  return r;
}

inline leakage::SweepTable cmd_sweep(Workspace& ws, std::span<const double> alphas,
                                     std::optional<leakage::ExperimentConfig> ec = std::nullopt) {
  auto c = ec.value_or(experiment_config(ws.config()));
  auto e = leakage::run_baseline(c);
  auto t = leakage::alpha_sweep(e, alphas);
  ws.write("sweep_manifest.txt", leakage::render_manifest(c, alphas), "sweep");
  ws.write("sweep.tsv", leakage::render_sweep(t), "sweep", {"sweep_manifest.txt"});
  return t;
}

}  // namespace fespam::app
