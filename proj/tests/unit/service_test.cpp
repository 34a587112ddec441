// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <future>
#include <regex>
#include <set>

#include <httplib.h>

#include "fespam/app/service.hpp"
#include "pipeline_fixture.hpp"

namespace fespam::app {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::plaintext_label;
using testing::run_pipeline;
using testing::scratch_dir;
using testing::toy_config;
using testing::toy_messages;

std::string b64(std::string_view s) {
  return base64_encode(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

json envelope(const std::vector<std::uint8_t>& ct, const std::string& id = "m") {
  return {{"id", id}, {"ciphertext", base64_encode(ct)}, {"ciphertext_sha256", to_hex(sha256(ct))}};
}

// One workspace per process; building it is the slow part.
struct Served {
  fs::path dir;
  std::unique_ptr<Workspace> ws;
  ServiceState st;
  std::vector<std::uint8_t> ct;  // a valid ciphertext for message 0

  static Served& get() {
    static Served s = [] {
      Served s;
      s.dir = scratch_dir("service");
      s.ws = std::make_unique<Workspace>(toy_config(s.dir));
      run_pipeline(*s.ws);
      std::ofstream(s.dir / "m.txt") << toy_messages(1)[0].second;
      cmd_encrypt(*s.ws, s.dir / "m.txt", s.dir / "m.ct");
      s.ct = read_binary(s.dir / "m.ct");
      s.st = load_service_state(*s.ws, true);
      return s;
    }();
    return s;
  }
};

// --------------------------------------------------------------- handlers

TEST(Handlers, HealthReportsOnDiskDigests) {
  auto& s = Served::get();
  auto r = handle_health(s.st);
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["backend"], "oracle");
  EXPECT_EQ(r.body["config_digest"], s.ws->config_hex());
  EXPECT_TRUE(r.body["encrypt_enabled"].get<bool>());
  for (const auto& [name, digest] : r.body["artifacts"].items())
    EXPECT_EQ(digest.get<std::string>(), to_hex(sha256(read_binary(s.dir / name)))) << name;
  EXPECT_EQ(r.body["artifacts"].size(), 23u);  // model, 20 keys, mpk, table
  EXPECT_FALSE(r.body["artifacts"].contains(artifact::msk));
}

TEST(Handlers, ClassifyOk) {
  auto& s = Served::get();
  auto r = handle_classify(s.st, envelope(s.ct, "abc").dump());
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["id"], "abc");
  auto label = r.body["label"].get<std::string>();
  EXPECT_EQ(r.body["action"], label == "spam" ? "withhold" : "forward");
  EXPECT_GE(r.body["timings"]["evaluate_seconds"].get<double>(), 0);
  EXPECT_GE(r.body["timings"]["dlog_seconds"].get<double>(), 0);
}

TEST(Handlers, MalformedPayloadsAre400) {
  auto& s = Served::get();
  EXPECT_EQ(handle_classify(s.st, "not json").status, 400);
  EXPECT_EQ(handle_classify(s.st, "[1,2]").status, 400);
  EXPECT_EQ(handle_classify(s.st, R"({"ciphertext": "AAAA"})").status, 400);
  auto e = envelope(s.ct);
  e["ciphertext"] = "!!!!";
  EXPECT_EQ(handle_classify(s.st, e.dump()).status, 400);
  e = envelope(s.ct);
  e["ciphertext_sha256"] = std::string(64, '0');
  EXPECT_EQ(handle_classify(s.st, e.dump()).status, 400);
  auto cut = std::vector<std::uint8_t>(s.ct.begin(), s.ct.begin() + static_cast<std::ptrdiff_t>(s.ct.size() / 2));
  auto r = handle_classify(s.st, envelope(cut).dump());
  EXPECT_EQ(r.status, 400);
  EXPECT_TRUE(r.body.contains("error"));
  EXPECT_EQ(handle_encrypt(s.st, R"({"email": 3})").status, 400);
  EXPECT_EQ(handle_encrypt(s.st, R"({"email": "***"})").status, 400);
}

TEST(Handlers, DigestMismatchesAre409) {
  auto& s = Served::get();
  auto e = envelope(s.ct);
  e["mpk_sha256"] = std::string(64, 'a');
  EXPECT_EQ(handle_classify(s.st, e.dump()).status, 409);
  e = envelope(s.ct);
  e["model_sha256"] = std::string(64, 'b');
  EXPECT_EQ(handle_classify(s.st, e.dump()).status, 409);
  e = envelope(s.ct);
  e["mpk_sha256"] = s.ws->digest_of(artifact::mpk);
  e["model_sha256"] = s.ws->digest_of(artifact::model);
  EXPECT_EQ(handle_classify(s.st, e.dump()).status, 200);

  // A ciphertext under someone else's public key.
  auto other = scratch_dir("service-other");
  auto c = toy_config(other);
  c.seed = 5;
  Workspace wo(c);
  run_pipeline(wo);
  std::ofstream(other / "m.txt") << toy_messages(1)[0].second;
  cmd_encrypt(wo, other / "m.txt", other / "m.ct");
  auto r = handle_classify(s.st, envelope(read_binary(other / "m.ct")).dump());
  EXPECT_EQ(r.status, 409);
  EXPECT_EQ(r.body["error"], "DigestMismatch");
}

TEST(Handlers, UnloadedArtifactsAre503) {
  auto dir = scratch_dir("service-empty");
  Workspace ws(toy_config(dir));
  auto st = load_service_state(ws, true);
  EXPECT_EQ(st.server, nullptr);
  EXPECT_FALSE(st.load_error.empty());
  EXPECT_EQ(handle_health(st).status, 503);
  EXPECT_EQ(handle_classify(st, "{}").status, 503);
  EXPECT_EQ(handle_encrypt(st, "{}").status, 503);
}

TEST(Handlers, EncryptCanBeDisabled) {
  auto& s = Served::get();
  auto st = load_service_state(*s.ws, false);
  EXPECT_EQ(handle_encrypt(st, json{{"email", b64("Subject: x\nhello\n")}}.dump()).status, 503);
  EXPECT_FALSE(handle_health(st).body["encrypt_enabled"].get<bool>());
}

// ------------------------------------------------------------------- HTTP

class Http : public ::testing::Test {
 protected:
  void SetUp() override {
    auto& s = Served::get();
    svc_ = std::make_unique<Service>(s.st, [this](const std::string& line) {
      std::lock_guard lock(mu_);
      log_ += line + "\n";
    });
    port_ = svc_->start();
    cli_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }
  void TearDown() override { svc_->stop(); }

  json post(const std::string& path, const json& body, int expect = 200) {
    auto res = cli_->Post(path, body.dump(), "application/json");
    EXPECT_TRUE(res);
    if (!res) return {};
    EXPECT_EQ(res->status, expect) << res->body;
    return json::parse(res->body);
  }

  std::unique_ptr<Service> svc_;
  std::unique_ptr<httplib::Client> cli_;
  int port_ = 0;
  std::mutex mu_;
  std::string log_;
};

TEST_F(Http, HealthOverTheWire) {
  auto res = cli_->Get("/v1/health");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body)["mpk_digest"].get<std::string>().size(), 64u);
}

TEST_F(Http, EncryptThenClassifyMatchesCli) {
  auto& s = Served::get();
  for (const auto& [id, msg] : toy_messages(12)) {
    auto enc = post("/v1/encrypt", {{"id", id}, {"email", b64(msg)}});
    auto path = s.dir / (id + ".eml");
    std::ofstream(path) << msg;
    auto local = cmd_encrypt(*s.ws, path, s.dir / (id + ".ct"));
    EXPECT_EQ(enc["ciphertext_sha256"], local.ciphertext_sha256) << id;
    auto remote = post("/v1/classify",
                       {{"id", id}, {"ciphertext", enc["ciphertext"]}, {"ciphertext_sha256", enc["ciphertext_sha256"]}});
    auto rec = cmd_classify(*s.ws, s.dir / (id + ".ct"));
    EXPECT_EQ(remote["label"], std::string(text::to_string(rec.label))) << id;
    EXPECT_EQ(remote["label"], std::string(text::to_string(plaintext_label(*s.ws, id, msg)))) << id;
    EXPECT_DOUBLE_EQ(remote["spam_probability"].get<double>(), rec.spam_probability);
  }
}

TEST_F(Http, BinaryExitCodeAgrees) {
  auto& s = Served::get();
  auto cfg_path = s.dir / "pipeline.conf";
  write_text(cfg_path, render_config(s.ws->config()));
  for (const auto& [id, msg] : toy_messages(6)) {
    auto eml = s.dir / (id + ".eml");
    std::ofstream(eml) << msg;
    auto enc = post("/v1/encrypt", {{"id", id}, {"email", b64(msg)}});
    auto ct = base64_decode(enc["ciphertext"].get<std::string>());
    write_binary(s.dir / (id + ".http.ct"), ct);
    auto cmd = std::string(FESPAM_CLI_PATH) + " --config " + cfg_path.string() + " classify " +
               (s.dir / (id + ".http.ct")).string() + " > /dev/null";
    int rc = std::system(cmd.c_str());
    ASSERT_TRUE(WIFEXITED(rc));
    auto remote = post("/v1/classify", envelope(ct, id));
    int want = remote["label"] == "spam" ? kExitSpam : kExitHam;
    EXPECT_EQ(WEXITSTATUS(rc), want) << id;
  }
  auto bad = s.dir / "garbage.ct";
  write_text(bad, "garbage");
  auto cmd = std::string(FESPAM_CLI_PATH) + " --config " + cfg_path.string() + " classify " + bad.string() +
             " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(rc));
  EXPECT_EQ(WEXITSTATUS(rc), kExitError);
}

TEST_F(Http, ConcurrentClassifyIsConsistent) {
  auto& s = Served::get();
  auto want = post("/v1/classify", envelope(s.ct))["label"];
  std::vector<std::future<std::string>> jobs;
  for (int t = 0; t < 8; ++t)
    jobs.push_back(std::async(std::launch::async, [&, t] {
      httplib::Client c("127.0.0.1", port_);
      std::string labels;
      for (int i = 0; i < 4; ++i) {
        auto res = c.Post("/v1/classify", envelope(s.ct, "t" + std::to_string(t)).dump(), "application/json");
        if (!res || res->status != 200) return std::string("error");
        labels += json::parse(res->body)["label"].get<std::string>() + ",";
      }
      return labels;
    }));
  std::string expect;
  for (int i = 0; i < 4; ++i) expect += want.get<std::string>() + ",";
  for (auto& j : jobs) EXPECT_EQ(j.get(), expect);
}

TEST_F(Http, LogCarriesNoContent) {
  const std::string canary = "zqxcanaryjv";
  auto msg = "Subject: " + canary + "\n" + canary + " body text " + canary + "\n";
  auto enc = post("/v1/encrypt", {{"id", canary + "-id"}, {"email", b64(msg)}});
  post("/v1/classify",
       {{"id", canary + "-id"}, {"ciphertext", enc["ciphertext"]}, {"ciphertext_sha256", enc["ciphertext_sha256"]}});
  post("/v1/classify", {{"id", canary}, {"ciphertext", "bad"}, {"ciphertext_sha256", "x"}}, 400);
  svc_->stop();
  std::lock_guard lock(mu_);
  EXPECT_FALSE(log_.empty());
  EXPECT_EQ(log_.find(canary), std::string::npos) << log_;
  EXPECT_EQ(log_.find(enc["ciphertext"].get<std::string>().substr(0, 24)), std::string::npos);
  std::istringstream lines(log_);
  std::string line;
  std::regex shape(R"(^(GET|POST) /v1/[a-z]+ \d{3} in=\d+B out=\d+B$)");
  while (std::getline(lines, line)) EXPECT_TRUE(std::regex_match(line, shape)) << line;
}

// ---------------------------------------------------------------- layering

// Walks the project includes reachable from the classifier header.
TEST(Layering, ClassifierHeaderNeverSeesPlaintextCode) {
  const auto root = fs::path(FESPAM_TEST_DATA) / ".." / ".." / "include";
  std::regex include(R"re(#include\s+"(fespam/[^"]+)")re");
  std::set<std::string> seen;
  std::vector<std::string> todo{"fespam/app/classifier.hpp"};
  while (!todo.empty()) {
    auto cur = todo.back();
    todo.pop_back();
    if (!seen.insert(cur).second) continue;
    auto src = read_text(root / cur);
    for (std::sregex_iterator it(src.begin(), src.end(), include), end; it != end; ++it) todo.push_back((*it)[1]);
  }
  EXPECT_GT(seen.size(), 5u);
  for (const auto* banned : {"fespam/app/sender.hpp", "fespam/text/corpus.hpp", "fespam/text/preprocess.hpp",
                             "fespam/text/tokenizer.hpp", "fespam/app/commands.hpp"})
    EXPECT_EQ(seen.count(banned), 0u) << banned << " is reachable from the classifier";
  EXPECT_EQ(read_text(root / "fespam/app/classifier.hpp").find("artifact::msk"), std::string::npos);
}

}  // namespace
}  // namespace fespam::app
