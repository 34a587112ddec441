// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "fespam/app/commands.hpp"
#include "pipeline_fixture.hpp"

namespace fespam::app {
namespace {

namespace fs = std::filesystem;
using testing::plaintext_label;
using testing::run_pipeline;
using testing::scratch_dir;
using testing::toy_config;
using testing::toy_messages;

template <typename F>
Errc code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no fespam::Error thrown";
  return Errc::invalid_argument;
}

std::string slurp(const fs::path& p) { return read_text(p); }

// ------------------------------------------------------------- config

TEST(Config, RenderParseRoundTrip) {
  PipelineConfig c;
  c.features = 321;
  c.alpha = 0.25;
  c.backend = fe::Backend::oracle;
  c.curve = std::string(fe::curve_of(c.backend));
  auto back = parse_config(render_config(c));
  EXPECT_EQ(render_config(back), render_config(c));
  EXPECT_EQ(config_digest(back), config_digest(c));
}

TEST(Config, CommentsAndBlankLines) {
  auto c = parse_config("# pipeline\nformat_version = 1\n\nfeatures = 42   # top terms\n");
  EXPECT_EQ(c.features, 42u);
}

TEST(Config, RejectsBadInput) {
  EXPECT_EQ(code_of([] { parse_config("format_version = 1\nfeaturez = 3\n"); }), Errc::config_error);
  EXPECT_EQ(code_of([] { parse_config("format_version = 1\nfeatures = ten\n"); }), Errc::config_error);
  EXPECT_EQ(code_of([] { parse_config("features = 10\n"); }), Errc::config_error);
  EXPECT_EQ(code_of([] { parse_config("format_version = 2\n"); }), Errc::config_error);
  EXPECT_EQ(code_of([] { parse_config("format_version = 1\nfeatures = 1\nfeatures = 2\n"); }), Errc::config_error);
  EXPECT_EQ(code_of([] { parse_config("format_version = 1\nbit_width = 6\n"); }), Errc::config_error);
  EXPECT_EQ(code_of([] { parse_config("format_version = 1\nsplit_ratio = 1.5\n"); }), Errc::config_error);
  EXPECT_EQ(code_of([] { parse_config("format_version = 1\nbackend = rsa\n"); }), Errc::config_error);
  EXPECT_EQ(code_of([] { parse_config("format_version = 1\nbackend = oracle\ncurve = bls12-381\n"); }), Errc::config_error);
  EXPECT_EQ(code_of([] { parse_config("format_version = 1\nno equals sign\n"); }), Errc::config_error);
  EXPECT_EQ(code_of([] { parse_config("format_version = 1\nport = 70000\n"); }), Errc::config_error);
}

TEST(Config, DigestIgnoresDeploymentFields) {
  PipelineConfig a, b;
  b.port = 9999;
  b.work_dir = "/elsewhere";
  b.alpha = 3;
  EXPECT_EQ(config_digest(a), config_digest(b));
  b.features = 7;
  EXPECT_NE(config_digest(a), config_digest(b));
}

// ------------------------------------------------------------ prepare

TEST(Prepare, MissingOrEmptyDatasetRoot) {
  auto dir = scratch_dir("missing");
  auto c = toy_config(dir / "work");
  c.dataset = (dir / "absent").string();
  Workspace ws(c);
  EXPECT_EQ(code_of([&] { cmd_prepare(ws); }), Errc::missing_dataset);
  fs::create_directories(dir / "empty");
  c.dataset = (dir / "empty").string();
  Workspace ws2(c);
  EXPECT_EQ(code_of([&] { cmd_prepare(ws2); }), Errc::missing_dataset);
}

TEST(Prepare, DirectoryLayoutAndCounts) {
  auto dir = scratch_dir("layout");
  auto write = [&](const std::string& rel, const std::string& text) {
    fs::create_directories((dir / "data" / rel).parent_path());
    std::ofstream(dir / "data" / rel) << text;
  };
  auto msgs = toy_messages(60, 5, 0);
  text::SpamCorpusConfig sc;
  sc.emails = 60;
  sc.seed = 5;
  auto raw = text::generate_spam_corpus(sc);
  for (std::size_t i = 0; i < raw.size(); ++i)
    write(std::string(text::to_string(raw[i].label)) + "/" + std::to_string(1000 + i) + ".txt", msgs[i].second);
  write("ham/short.txt", "Subject: hi\nok\n");
  auto c = toy_config(dir / "work");
  c.dataset = (dir / "data").string();
  c.features = 20;
  Workspace ws(c);
  auto r = cmd_prepare(ws);
  EXPECT_EQ(r.report.total, 61u);
  EXPECT_EQ(r.report.rejected_too_short, 1u);
  EXPECT_EQ(r.report.kept, r.train + r.test);
  EXPECT_EQ(r.features, 20u);
}

TEST(Prepare, RerunIsByteIdentical) {
  auto dir = scratch_dir("rerun");
  Workspace ws(toy_config(dir));
  cmd_prepare(ws);
  std::map<std::string, std::string> first;
  for (auto* n : {artifact::corpus, artifact::vocabulary, artifact::features, artifact::split}) first[n] = slurp(dir / n);
  cmd_prepare(ws);
  for (const auto& [n, bytes] : first) EXPECT_EQ(slurp(dir / n), bytes) << n;
}

// ------------------------------------------------------ keygen and integrity

TEST(Pipeline, ToyConfigEmitsTwentyKeys) {
  auto dir = scratch_dir("keys");
  Workspace ws(toy_config(dir));
  cmd_prepare(ws);
  auto tr = cmd_train(ws);
  EXPECT_GT(tr.test_accuracy, 0.85);
  auto q = cmd_quantize(ws);
  EXPECT_EQ(q.bit_width, 4);
  auto k = cmd_keygen(ws);
  EXPECT_EQ(k.keys, 20u);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir / "keys")) files += e.path().extension() == ".bin";
  EXPECT_EQ(files, 20u);
  EXPECT_TRUE(fs::exists(dir / artifact::mpk));
  EXPECT_TRUE(fs::exists(dir / artifact::table));
  auto m = nlohmann::json::parse(slurp(dir / kManifestName));
  EXPECT_EQ(m["artifacts"]["keys/key-19.bin"]["inputs"]["model.txt"], ws.digest_of(artifact::model));
  EXPECT_EQ(m["config_digest"], ws.config_hex());
}

TEST(Pipeline, HugeBoundIsRefusedWithHint) {
  auto dir = scratch_dir("overflow");
  auto c = toy_config(dir);
  c.features = 300;
  c.bit_width = 8;
  c.x_max = 1000;
  Workspace ws(c);
  cmd_prepare(ws);
  cmd_train(ws);
  auto q = cmd_quantize(ws);
  EXPECT_GT(q.max_bound, c.dlog_capacity);
  try {
    cmd_keygen(ws);
    FAIL() << "keygen accepted an unbounded model";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::bound_overflow);
    std::string msg = e.what();
    EXPECT_NE(msg.find("bit_width"), std::string::npos);
    EXPECT_NE(msg.find("x_max"), std::string::npos);
  }
  EXPECT_FALSE(fs::exists(dir / artifact::mpk));
}

TEST(Pipeline, DownstreamStepsNeedUpstreamArtifacts) {
  auto dir = scratch_dir("order");
  Workspace ws(toy_config(dir));
  EXPECT_EQ(code_of([&] { cmd_train(ws); }), Errc::io_error);
  cmd_prepare(ws);
  cmd_train(ws);
  EXPECT_EQ(code_of([&] { cmd_keygen(ws); }), Errc::invalid_argument);  // not quantized
}

TEST(Pipeline, TamperedArtifactsAreRefused) {
  auto dir = scratch_dir("tamper");
  Workspace ws(toy_config(dir));
  run_pipeline(ws);
  auto msgs = toy_messages(1);
  std::ofstream(dir / "m.txt") << msgs[0].second;
  cmd_encrypt(ws, dir / "m.txt", dir / "m.ct");
  EXPECT_NO_THROW(cmd_classify(ws, dir / "m.ct"));

  auto model = slurp(dir / artifact::model);
  auto bad = model;
  bad[bad.size() / 2] = bad[bad.size() / 2] == '0' ? '1' : '0';
  write_text(dir / artifact::model, bad);
  EXPECT_EQ(code_of([&] { cmd_classify(ws, dir / "m.ct"); }), Errc::digest_mismatch);
  write_text(dir / artifact::model, model);
  EXPECT_NO_THROW(cmd_classify(ws, dir / "m.ct"));

  auto key = read_binary(dir / artifact::key(3));
  key.back() ^= 1;
  write_binary(dir / artifact::key(3), key);
  EXPECT_EQ(code_of([&] { cmd_classify(ws, dir / "m.ct"); }), Errc::digest_mismatch);
}

TEST(Pipeline, RetrainingInvalidatesKeys) {
  auto dir = scratch_dir("stale");
  Workspace ws(toy_config(dir));
  run_pipeline(ws);
  // Training is deterministic, so a rebuilt model is byte-identical and the
  // keys stay valid. A model recorded with different weights must not.
  cmd_train(ws);
  cmd_quantize(ws);
  EXPECT_NO_THROW(load_server_state(ws));
  auto model = ws.read_text(artifact::model);
  auto pos = model.rfind("1\n");
  ASSERT_NE(pos, std::string::npos);
  model[pos] = '2';
  ws.write(artifact::model, model, "edit", {artifact::features});
  Workspace again(ws.config());
  EXPECT_EQ(code_of([&] { load_server_state(again); }), Errc::digest_mismatch);
}

TEST(Pipeline, ConfigChangeAfterPrepareIsRefused) {
  auto dir = scratch_dir("cfgchange");
  auto c = toy_config(dir);
  Workspace ws(c);
  cmd_prepare(ws);
  c.features = 40;
  Workspace changed(c);
  EXPECT_EQ(code_of([&] { cmd_train(changed); }), Errc::digest_mismatch);
}

TEST(Pipeline, EditedCorpusIsRefused) {
  auto dir = scratch_dir("corpus");
  Workspace ws(toy_config(dir));
  cmd_prepare(ws);
  auto text = slurp(dir / artifact::corpus);
  text += "";
  text.back() = ' ';
  write_text(dir / artifact::corpus, text);
  EXPECT_EQ(code_of([&] { cmd_train(ws); }), Errc::digest_mismatch);
}

// --------------------------------------------------- encrypt / classify

void check_round_trip(fe::Backend backend, std::size_t emails) {
  auto dir = scratch_dir("roundtrip-" + fe::to_string(backend));
  Workspace ws(toy_config(dir, backend));
  run_pipeline(ws);
  std::size_t spam = 0;
  for (const auto& [id, content] : toy_messages(emails)) {
    auto path = dir / (id + ".eml");
    std::ofstream(path) << content;
    auto enc = cmd_encrypt(ws, path, dir / (id + ".ct"));
    EXPECT_GE(enc.encrypt_seconds, 0);
    auto rec = cmd_classify(ws, dir / (id + ".ct"));
    EXPECT_EQ(rec.label, plaintext_label(ws, id, content)) << id;
    EXPECT_EQ(rec.id, id);
    EXPECT_EQ(rec.backend, backend);
    EXPECT_GE(rec.timings.evaluate, 0);
    EXPECT_GE(rec.timings.dlog, 0);
    EXPECT_GE(rec.timings.plaintext_part, 0);
    EXPECT_FALSE(rec.timings.encrypt.has_value());
    EXPECT_EQ(exit_code(rec), rec.label == text::Label::spam ? 10 : 0);
    spam += rec.label == text::Label::spam;
  }
  EXPECT_GT(spam, 0u);
  EXPECT_LT(spam, emails);
}

TEST(Classify, MatchesPlaintextPathOracle) { check_round_trip(fe::Backend::oracle, 60); }

TEST(Classify, MatchesPlaintextPathPairing) { check_round_trip(fe::Backend::pairing, 8); }

TEST(Classify, TruncatedCiphertextIsACleanError) {
  auto dir = scratch_dir("trunc");
  Workspace ws(toy_config(dir));
  run_pipeline(ws);
  std::ofstream(dir / "m.txt") << toy_messages(1)[0].second;
  cmd_encrypt(ws, dir / "m.txt", dir / "m.ct");
  auto bytes = read_binary(dir / "m.ct");
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, bytes.size() / 2, bytes.size() - 1}) {
    write_binary(dir / "cut.ct", std::span(bytes).first(cut));
    EXPECT_THROW(cmd_classify(ws, dir / "cut.ct"), Error) << cut;
  }
}

TEST(Classify, ForeignKeysAreRefused) {
  auto a = scratch_dir("foreign-a");
  auto b = scratch_dir("foreign-b");
  auto ca = toy_config(a);
  auto cb = toy_config(b);
  cb.seed = 2;
  Workspace wa(ca), wb(cb);
  run_pipeline(wa);
  run_pipeline(wb);
  std::ofstream(a / "m.txt") << toy_messages(1)[0].second;
  cmd_encrypt(wa, a / "m.txt", a / "m.ct");
  EXPECT_EQ(code_of([&] { cmd_classify(wb, a / "m.ct"); }), Errc::digest_mismatch);
}

TEST(Classify, BackendMismatchIsRefused) {
  auto a = scratch_dir("bk-a");
  auto b = scratch_dir("bk-b");
  Workspace wa(toy_config(a, fe::Backend::oracle)), wb(toy_config(b, fe::Backend::pairing));
  run_pipeline(wa);
  run_pipeline(wb);
  std::ofstream(a / "m.txt") << toy_messages(1)[0].second;
  cmd_encrypt(wa, a / "m.txt", a / "m.ct");
  EXPECT_EQ(code_of([&] { cmd_classify(wb, a / "m.ct"); }), Errc::backend_mismatch);
}

TEST(Classify, CountsAboveXmaxAreClamped) {
  auto dir = scratch_dir("clamp");
  auto c = toy_config(dir);
  c.weighting = "counts";
  c.x_max = 2;
  Workspace ws(c);
  run_pipeline(ws);
  auto features = text::parse_vocabulary(ws.read_text(artifact::features));
  std::string body = "Subject: x\n";
  for (int i = 0; i < 5; ++i) body += features.term(0) + " ";
  std::ofstream(dir / "m.txt") << body << "\n";
  auto r = cmd_encrypt(ws, dir / "m.txt", dir / "m.ct");
  EXPECT_EQ(r.clamped, 1u);
  EXPECT_NO_THROW(cmd_classify(ws, dir / "m.ct"));
}

// ----------------------------------------------------------- determinism

TEST(Determinism, SameConfigSameArtifactsAndRecords) {
  auto a = scratch_dir("det-a");
  auto b = scratch_dir("det-b");
  Workspace wa(toy_config(a)), wb(toy_config(b));
  run_pipeline(wa);
  run_pipeline(wb);
  for (auto* n : {artifact::corpus, artifact::features, artifact::split, artifact::model, artifact::mpk, artifact::msk,
                  artifact::table})
    EXPECT_EQ(read_binary(a / n), read_binary(b / n)) << n;
  for (std::size_t j = 0; j < 20; ++j) EXPECT_EQ(read_binary(a / artifact::key(j)), read_binary(b / artifact::key(j)));
  auto msg = toy_messages(1)[0].second;
  std::ofstream(a / "m.txt") << msg;
  std::ofstream(b / "m.txt") << msg;
  cmd_encrypt(wa, a / "m.txt", a / "m.ct");
  cmd_encrypt(wb, b / "m.txt", b / "m.ct");
  EXPECT_EQ(read_binary(a / "m.ct"), read_binary(b / "m.ct"));
  EXPECT_EQ(to_json(cmd_classify(wa, a / "m.ct"), false), to_json(cmd_classify(wb, b / "m.ct"), false));
  EXPECT_EQ(wa.manifest()["artifacts"], wb.manifest()["artifacts"]);
}

TEST(Determinism, OsRandomnessStillClassifiesTheSame) {
  auto dir = scratch_dir("osrand");
  auto c = toy_config(dir);
  c.randomness = "os";
  Workspace ws(c);
  run_pipeline(ws);
  auto [id, msg] = toy_messages(1)[0];
  std::ofstream(dir / "m.txt") << msg;
  cmd_encrypt(ws, dir / "m.txt", dir / "m1.ct");
  cmd_encrypt(ws, dir / "m.txt", dir / "m2.ct");
  EXPECT_NE(read_binary(dir / "m1.ct"), read_binary(dir / "m2.ct"));
  EXPECT_EQ(cmd_classify(ws, dir / "m1.ct").label, cmd_classify(ws, dir / "m2.ct").label);
}

// ------------------------------------------------------------------ bench

TEST(Bench, SizesMustAscend) {
  auto dir = scratch_dir("bench-order");
  Workspace ws(toy_config(dir));
  cmd_prepare(ws);
  BenchOptions o;
  o.sizes = {40, 20};
  EXPECT_EQ(code_of([&] { cmd_bench(ws, o); }), Errc::invalid_argument);
  o.sizes = {};
  EXPECT_EQ(code_of([&] { cmd_bench(ws, o); }), Errc::invalid_argument);
}

TEST(Bench, SingleSizeOmitsFit) {
  auto dir = scratch_dir("bench-one");
  Workspace ws(toy_config(dir));
  cmd_prepare(ws);
  BenchOptions o;
  o.sizes = {30};
  o.emails_per_size = 3;
  o.he_emails_per_size = 3;
  o.he_key_bits = he::kTestKeyBits;
  auto r = cmd_bench(ws, o);
  EXPECT_TRUE(r.fit_omitted);
  ASSERT_EQ(r.fe.size(), 1u);
  ASSERT_EQ(r.he.size(), 1u);
  for (const auto& f : r.fits) EXPECT_FALSE(f.fit.has_value()) << f.name;
  auto j = nlohmann::json::parse(slurp(dir / "bench.json"));
  EXPECT_TRUE(j["fit_omitted"].get<bool>());
  EXPECT_TRUE(j["fits"]["fe_encrypt"].is_null());
}

TEST(Bench, SweepReportsBothSchemesAndFits) {
  auto dir = scratch_dir("bench-sweep");
  Workspace ws(toy_config(dir));
  cmd_prepare(ws);
  BenchOptions o;
  o.sizes = {10, 20, 40};
  o.emails_per_size = 4;
  o.he_emails_per_size = 4;
  o.he_key_bits = he::kTestKeyBits;
  auto r = cmd_bench(ws, o);
  EXPECT_FALSE(r.fit_omitted);
  ASSERT_EQ(r.fe.size(), 3u);
  ASSERT_EQ(r.he.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(r.fe[i].n, o.sizes[i]);
    EXPECT_EQ(r.fe[i].agreement, r.fe[i].emails);
    EXPECT_EQ(r.he[i].mismatches, 0u);
    EXPECT_GE(r.fe[i].evaluate_seconds, 0);
    EXPECT_GE(r.fe[i].dlog_seconds, 0);
    EXPECT_GT(r.fe[i].dense_evaluate_seconds, 0);
    EXPECT_LE(r.fe[i].projection_nonzeros, 40 * (o.sizes[i] + 1));
  }
  for (const char* name : {"fe_encrypt", "fe_evaluate", "fe_predict", "fe_evaluate_dense", "he_encrypt", "he_predict"}) {
    ASSERT_NE(r.fit(name), nullptr) << name;
    EXPECT_TRUE(r.fit(name)->fit.has_value()) << name;
  }
  auto tsv = slurp(dir / "bench.tsv");
  EXPECT_EQ(std::count(tsv.begin(), tsv.end(), '\n'), 4);
}

TEST(Bench, DenseControlCanBeDisabled) {
  auto dir = scratch_dir("bench-nodense");
  Workspace ws(toy_config(dir));
  cmd_prepare(ws);
  BenchOptions o;
  o.sizes = {10, 20};
  o.emails_per_size = 2;
  o.he_emails_per_size = 0;
  o.dense_control = false;
  auto r = cmd_bench(ws, o);
  for (const auto& row : r.fe) EXPECT_EQ(row.dense_evaluate_seconds, 0);
  EXPECT_EQ(r.fit("fe_evaluate_dense"), nullptr);
}

// ----------------------------------------------------------------- attack

TEST(Attack, WordPresenceAdversaries) {
  auto dir = scratch_dir("attack");
  Workspace ws(toy_config(dir));
  cmd_prepare(ws);
  cmd_train(ws);
  auto adv = leakage::adversary_defaults();
  adv.epochs = 30;
  auto r = cmd_attack(ws, 3, adv);
  ASSERT_EQ(r.rows.size(), 3u);
  for (const auto& row : r.rows) {
    EXPECT_FALSE(row.term.empty());
    EXPECT_GE(row.adversary, 0.0);
    EXPECT_LE(row.adversary, 1.0);
    EXPECT_GE(row.majority, 0.5);
  }
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "attack.json")).size(), 3u);
  EXPECT_EQ(code_of([&] { cmd_attack(ws, 51, adv); }), Errc::k_too_large);
}

// ---------------------------------------------------------- defend / sweep

leakage::ExperimentConfig small_experiment() {
  auto c = leakage::with_seed(leakage::ExperimentConfig{}, 1);
  c.corpus.documents = 900;
  c.adversary.epochs = 40;
  c.public_head.epochs = 20;
  c.rounds = 2;
  return c;
}

TEST(Sweep, WritesTableAndManifest) {
  auto dir = scratch_dir("sweep");
  Workspace ws(toy_config(dir));
  std::vector<double> alphas{0, 1};
  auto t = cmd_sweep(ws, alphas, small_experiment());
  ASSERT_EQ(t.rows.size(), 2u);
  auto tsv = slurp(dir / "sweep.tsv");
  EXPECT_EQ(tsv.rfind("alpha\tpub_acc\tadv_acc\tseed\tepochs\n", 0), 0u);
  EXPECT_NE(slurp(dir / "sweep_manifest.txt").find("alphas = 0 1"), std::string::npos);
  EXPECT_TRUE(ws.has("sweep.tsv"));
}

TEST(Defend, ReportsBeforeAndAfter) {
  auto dir = scratch_dir("defend");
  Workspace ws(toy_config(dir));
  auto r = cmd_defend(ws, small_experiment());
  EXPECT_EQ(r.defense.alpha, 1.0);
  EXPECT_GT(r.public_before, 0.8);
  auto j = nlohmann::json::parse(slurp(dir / "defend.json"));
  EXPECT_TRUE(j["after"].contains("adversary_accuracy"));
}

}  // namespace
}  // namespace fespam::app
