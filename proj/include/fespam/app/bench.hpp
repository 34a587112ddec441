// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Feature-count sweep over both schemes: accuracy and timing per size,
// with affine fits of time against n.

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fespam/app/sender.hpp"
#include "fespam/common/stats.hpp"
#include "fespam/common/timer.hpp"
#include "fespam/fe/scheme.hpp"
#include "fespam/he/bench.hpp"
#include "fespam/nn/quadnet.hpp"
#include "fespam/nn/quantize.hpp"
#include "fespam/text/split.hpp"

namespace fespam::app {

struct BenchOptions {
  std::vector<std::size_t> sizes;
  std::size_t emails_per_size = 10;     // encrypted and classified per size
  std::size_t he_emails_per_size = 20;
  unsigned he_key_bits = he::kRealKeyBits;
  bool run_he = true;
  // Certified bounds grow with n^2; 4-bit weights keep large sweeps under
  // the default dlog capacity.
  std::optional<int> bit_width;
  std::uint64_t table_entries = std::uint64_t{1} << 16;
  // Also time evaluation on a dense random form of the same shape. Trained
  // low-bit projections are mostly zeros, and evaluation skips zeros, so
  // their cost tracks the model's sparsity rather than n.
  bool dense_control = true;
};

struct FeBenchRow {
  std::size_t n = 0;
  double float_accuracy = 0;      // full test split
  double quantized_accuracy = 0;  // full test split, integer path
  double encrypted_accuracy = 0;  // sampled emails, encrypted path
  std::size_t agreement = 0;      // sampled emails where encrypted == quantized label
  std::size_t emails = 0;
  std::uint64_t max_bound = 0;
  // Per email, median over the sample.
  double encrypt_seconds = 0;
  double evaluate_seconds = 0;
  double dlog_seconds = 0;
  double plaintext_seconds = 0;
  std::size_t projection_nonzeros = 0;
  double dense_evaluate_seconds = 0;  // 0 when the control is off

  double predict_seconds() const { return evaluate_seconds + dlog_seconds + plaintext_seconds; }
};

struct SeriesFit {
  std::string name;
  std::optional<LinearFit> fit;  // absent with fewer than two sizes
};

struct BenchReport {
  std::vector<FeBenchRow> fe;
  std::vector<he::HeBenchRow> he;
  std::vector<SeriesFit> fits;
  bool fit_omitted = false;  // single size: nothing to fit
  fe::Backend backend = fe::Backend::pairing;
  int bit_width = 8;

  // FE per-email prediction is slower than HE at every size.
  bool fe_slower_everywhere() const {
    if (fe.size() != he.size() || fe.empty()) return false;
    for (std::size_t i = 0; i < fe.size(); ++i)
      if (!(fe[i].predict_seconds() > he[i].predict_seconds())) return false;
    return true;
  }

  const SeriesFit* fit(const std::string& name) const {
    for (const auto& f : fits)
      if (f.name == name) return &f;
    return nullptr;
  }
};

inline void check_sizes(std::span<const std::size_t> sizes) {
  require(!sizes.empty(), Errc::invalid_argument, "no sizes to benchmark");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    require(sizes[i] >= 1, Errc::invalid_argument, "sizes must be positive");
    require(i == 0 || sizes[i] > sizes[i - 1], Errc::invalid_argument, "sizes must be strictly ascending");
  }
}

namespace detail {

inline nn::Prediction quantized_prediction(const nn::QuadNetParams& p, const nn::QuantizedEncryptedPart& qp,
                                           const text::FeatureVector& x) {
  return nn::predict_from_intermediate(nn::forward_encryptedpart_int(x, qp), qp, p.plain);
}

// Same shape as `qp`, every projection weight uniform in [-qmax, qmax].
inline nn::QuantizedEncryptedPart dense_form(const nn::QuantizedEncryptedPart& qp, std::uint64_t seed) {
  auto d = qp;
  const int qmax = (1 << (qp.bit_width - 1)) - 1;
  Rng rng(seed);
  for (auto& v : d.projection.flat()) v = static_cast<std::int32_t>(rng.between(-qmax, qmax));
  return d;
}

template <typename G>
std::optional<fe::DlogTable<G>> bench_table(fe::Backend b, fe::Backend want, std::uint64_t m) {
  if (b != want || m == 0) return std::nullopt;
  return fe::DlogTable<G>::build(G::generator(), m);
}

}  // namespace detail

// `corpus` is the tokenized corpus, `vocab` the training-side vocabulary
// features are selected from, `split` indexes into corpus.
inline BenchReport run_bench(std::span<const text::TokenizedEmail> corpus, const text::Vocabulary& vocab,
                             const text::IndexSplit& split, const PipelineConfig& cfg, const BenchOptions& opt) {
  check_sizes(opt.sizes);
  require(opt.sizes.back() <= vocab.size(), Errc::n_too_large,
          "largest size " + std::to_string(opt.sizes.back()) + " exceeds the vocabulary (" + std::to_string(vocab.size()) + ")");
  BenchReport rep;
  rep.backend = cfg.backend;
  rep.bit_width = opt.bit_width.value_or(cfg.bit_width);
  // One table for every size: it depends on the group, not on n.
  auto gt_table = detail::bench_table<fe::Gt>(cfg.backend, fe::Backend::pairing, opt.table_entries);
  auto or_table = detail::bench_table<fe::OracleElem>(cfg.backend, fe::Backend::oracle, opt.table_entries);
  fe::DlogTables tables{gt_table ? &*gt_table : nullptr, or_table ? &*or_table : nullptr};

  for (std::size_t n : opt.sizes) {
    auto features = text::select_features(vocab, n);
    auto vec = [&](std::size_t i) {
      return text::LabeledVector{corpus[i].id, featurize(corpus[i], features, cfg).x, corpus[i].label};
    };
    text::DatasetSplit ds;
    for (auto i : split.train) ds.train.push_back(vec(i));
    for (auto i : split.test) ds.test.push_back(vec(i));
    nn::TrainConfig tc;
    tc.epochs = cfg.train_epochs;
    tc.learning_rate = cfg.learning_rate;
    tc.seed = cfg.seed;
    auto params = nn::train(ds, tc);
    auto qp = nn::quantize(params, rep.bit_width);

    FeBenchRow row;
    row.n = n;
    row.float_accuracy = nn::accuracy(params, ds.test);
    std::size_t ok = 0;
    for (const auto& d : ds.test) ok += detail::quantized_prediction(params, qp, d.x).label == d.label;
    row.quantized_accuracy = static_cast<double>(ok) / static_cast<double>(std::max<std::size_t>(1, ds.test.size()));
    row.max_bound = fe::max_certified_bound(qp, cfg.x_max);
    for (auto v : qp.projection.flat()) row.projection_nonzeros += v != 0;

    auto keys = fe::setup(n, {cfg.backend, cfg.curve, cfg.x_max}, cfg.seed + n);
    auto fks = fe::derive_keys(keys.msk, qp, {cfg.dlog_capacity});
    std::optional<nn::QuantizedEncryptedPart> dense;
    std::vector<fe::FunctionalKey> dense_keys;
    if (opt.dense_control) {
      dense = detail::dense_form(qp, cfg.seed + n);
      dense_keys = fe::derive_keys(keys.msk, *dense, {cfg.dlog_capacity});
    }
    auto rs = RandomSource::seeded(cfg.seed ^ (0xbe4c4ULL + n));
    row.emails = std::min(opt.emails_per_size, ds.test.size());
    if (row.emails) {
      // Untimed warm-up; the first pairing after keygen pays for cold caches.
      auto warm_rs = RandomSource::seeded(~cfg.seed);
      auto warm = fe::encrypt(keys.mpk, std::span<const std::uint32_t>(ds.test[0].x.counts), warm_rs);
      fe::decrypt_all(qp, warm, fks, tables);
      if (dense) fe::decrypt_all(*dense, warm, dense_keys, tables);
    }
    // Per-email medians; a mean over a handful of emails is at the mercy of one slow call.
    std::vector<double> enc_s, eval_s, dlog_s, plain_s, dense_s;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < row.emails; ++i) {
      const auto& d = ds.test[i];
      Stopwatch sw;
      auto ct = fe::encrypt(keys.mpk, std::span<const std::uint32_t>(d.x.counts), rs);
      enc_s.push_back(sw.seconds());
      fe::DecryptReport dr;
      auto q = fe::decrypt_all(qp, ct, fks, tables, &dr);
      eval_s.push_back(dr.evaluation_seconds);
      dlog_s.push_back(dr.dlog_seconds);
      sw.reset();
      auto p = nn::predict_from_intermediate(q, qp, params.plain);
      plain_s.push_back(sw.seconds());
      correct += p.label == d.label;
      row.agreement += p.label == detail::quantized_prediction(params, qp, d.x).label;
      if (dense) {
        fe::DecryptReport cr;
        auto dq = fe::decrypt_all(*dense, ct, dense_keys, tables, &cr);
        require(dq == nn::forward_encryptedpart_int(d.x, *dense), Errc::invalid_argument, "dense control mismatch");
        dense_s.push_back(cr.evaluation_seconds);
      }
    }
    if (row.emails) {
      row.encrypt_seconds = median(enc_s);
      row.evaluate_seconds = median(eval_s);
      row.dlog_seconds = median(dlog_s);
      row.plaintext_seconds = median(plain_s);
      if (dense) row.dense_evaluate_seconds = median(dense_s);
      row.encrypted_accuracy = static_cast<double>(correct) / static_cast<double>(row.emails);
    }
    rep.fe.push_back(row);
  }

  if (opt.run_he) {
    he::HeBenchOptions ho;
    ho.key_bits = opt.he_key_bits;
    ho.emails_per_size = opt.he_emails_per_size;
    ho.split_ratio = cfg.split_ratio;
    ho.seed = cfg.seed;
    ho.weighting = cfg.term_weighting();
    rep.he = he::bench_roundtrip(corpus, vocab, opt.sizes, ho).rows;
  }

  rep.fit_omitted = opt.sizes.size() < 2;
  std::vector<double> x(opt.sizes.begin(), opt.sizes.end());
  auto add = [&](const std::string& name, auto&& value, std::size_t count) {
    SeriesFit f{name, std::nullopt};
    if (!rep.fit_omitted && count == x.size()) {
      std::vector<double> y;
      for (std::size_t i = 0; i < count; ++i) y.push_back(value(i));
      f.fit = fit_affine(x, y);
    }
    rep.fits.push_back(std::move(f));
  };
  add("fe_encrypt", [&](std::size_t i) { return rep.fe[i].encrypt_seconds; }, rep.fe.size());
  add("fe_evaluate", [&](std::size_t i) { return rep.fe[i].evaluate_seconds; }, rep.fe.size());
  add("fe_predict", [&](std::size_t i) { return rep.fe[i].predict_seconds(); }, rep.fe.size());
  if (opt.dense_control)
    add("fe_evaluate_dense", [&](std::size_t i) { return rep.fe[i].dense_evaluate_seconds; }, rep.fe.size());
  if (opt.run_he) {
    add("he_encrypt", [&](std::size_t i) { return rep.he[i].encrypt_seconds; }, rep.he.size());
    add("he_predict", [&](std::size_t i) { return rep.he[i].predict_seconds(); }, rep.he.size());
  }
  return rep;
}

inline nlohmann::json to_json(const BenchReport& r) {
  using nlohmann::json;
  json j;
  j["backend"] = fe::to_string(r.backend);
  j["bit_width"] = r.bit_width;
  j["fit_omitted"] = r.fit_omitted;
  json fe = json::array();
  for (const auto& row : r.fe)
    fe.push_back({{"n", row.n},
                  {"float_accuracy", row.float_accuracy},
                  {"quantized_accuracy", row.quantized_accuracy},
                  {"encrypted_accuracy", row.encrypted_accuracy},
                  {"agreement", row.agreement},
                  {"emails", row.emails},
                  {"max_bound", row.max_bound},
                  {"encrypt_seconds", row.encrypt_seconds},
                  {"evaluate_seconds", row.evaluate_seconds},
                  {"dlog_seconds", row.dlog_seconds},
                  {"plaintext_seconds", row.plaintext_seconds},
                  {"projection_nonzeros", row.projection_nonzeros},
                  {"dense_evaluate_seconds", row.dense_evaluate_seconds},
                  {"predict_seconds", row.predict_seconds()}});
  j["fe"] = fe;
  json he = json::array();
  for (const auto& row : r.he)
    he.push_back({{"n", row.n},
                  {"plain_accuracy", row.plain_accuracy},
                  {"encrypted_accuracy", row.encrypted_accuracy},
                  {"mismatches", row.mismatches},
                  {"emails", row.emails},
                  {"encrypt_seconds", row.encrypt_seconds},
                  {"score_seconds", row.score_seconds},
                  {"decrypt_seconds", row.decrypt_seconds},
                  {"network_seconds", row.network_seconds},
                  {"predict_seconds", row.predict_seconds()}});
  j["he"] = he;
  json fits = json::object();
  for (const auto& f : r.fits) {
    if (f.fit) fits[f.name] = {{"slope", f.fit->slope}, {"intercept", f.fit->intercept}, {"r2", f.fit->r2}};
    else fits[f.name] = nullptr;
  }
  j["fits"] = fits;
  if (!r.he.empty()) j["fe_slower_than_he_everywhere"] = r.fe_slower_everywhere();
  return j;
}

// Plot-ready TSV, one row per size.
inline std::string render_bench_tsv(const BenchReport& r) {
  std::ostringstream out;
  out << "n\tfe_float_acc\tfe_quant_acc\tfe_enc_acc\tfe_encrypt_s\tfe_evaluate_s\tfe_dlog_s\tfe_plain_s\tfe_predict_s\tfe_nonzeros\tfe_dense_evaluate_s";
  if (!r.he.empty()) out << "\the_acc\the_encrypt_s\the_predict_s";
  out << "\n";
  for (std::size_t i = 0; i < r.fe.size(); ++i) {
    const auto& f = r.fe[i];
    out << f.n << '\t' << f.float_accuracy << '\t' << f.quantized_accuracy << '\t' << f.encrypted_accuracy << '\t'
        << f.encrypt_seconds << '\t' << f.evaluate_seconds << '\t' << f.dlog_seconds << '\t' << f.plaintext_seconds << '\t'
        << f.predict_seconds() << '\t' << f.projection_nonzeros << '\t' << f.dense_evaluate_seconds;
    if (i < r.he.size())
      out << '\t' << r.he[i].plain_accuracy << '\t' << r.he[i].encrypt_seconds << '\t' << r.he[i].predict_seconds();
    out << "\n";
  }
  return out.str();
}

}  // namespace fespam::app
