// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

// fespam: command-line driver for the encrypted spam filter pipeline.
// Exit codes: 0 ham (or success), 10 spam, 1 error.

#include <csignal>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fespam/app/commands.hpp"
#include "fespam/app/service.hpp"

namespace {

using namespace fespam;
using namespace fespam::app;
using nlohmann::json;

app::Service* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

template <typename T>
std::vector<T> parse_list(const std::string& s, const char* what) {
  std::vector<T> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::istringstream v(item);
    T x{};
    if (!(v >> x) || !v.eof()) fail(Errc::invalid_argument, std::string("bad ") + what + " entry '" + item + "'");
    out.push_back(x);
  }
  require(!out.empty(), Errc::invalid_argument, std::string("empty ") + what + " list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Spam filtering on functionally encrypted email features"};
  cli.require_subcommand(1);

  std::string config_path, work_dir, backend;
  std::optional<std::uint64_t> seed;
  cli.add_option("--config", config_path, "Pipeline config file (key = value)");
  cli.add_option("--seed", seed, "Override the config seed");
  cli.add_option("--backend", backend, "FE backend")->check(CLI::IsMember({"pairing", "oracle"}));
  cli.add_option("--work-dir", work_dir, "Override the config work_dir");

  auto* prepare = cli.add_subcommand("prepare", "Preprocess the dataset and select features");
  auto* train = cli.add_subcommand("train", "Train the quadratic network");
  auto* quantize = cli.add_subcommand("quantize", "Quantize the encrypted part");
  auto* keygen = cli.add_subcommand("keygen", "Set up FE keys, derive functional keys, build the dlog table");

  auto* encrypt = cli.add_subcommand("encrypt", "Encrypt an email file (sender side)");
  std::string email_path, ct_out;
  encrypt->add_option("email", email_path, "Email file")->required()->check(CLI::ExistingFile);
  encrypt->add_option("-o,--out", ct_out, "Ciphertext output path")->required();

  auto* classify_cmd = cli.add_subcommand("classify", "Classify a ciphertext file (server side)");
  std::string ct_path;
  classify_cmd->add_option("ciphertext", ct_path, "Ciphertext file")->required()->check(CLI::ExistingFile);

  auto* bench = cli.add_subcommand("bench", "Sweep feature counts over the FE and HE schemes");
  std::string sizes = "100,200,400,800";
  BenchOptions bopt;
  int bench_bits = 4;
  bool no_he = false;
  bool no_dense = false;
  bench->add_option("--sizes", sizes, "Comma-separated ascending feature counts")->capture_default_str();
  bench->add_option("--emails", bopt.emails_per_size, "FE emails per size")->capture_default_str();
  bench->add_option("--he-emails", bopt.he_emails_per_size, "HE emails per size")->capture_default_str();
  bench->add_option("--he-key-bits", bopt.he_key_bits, "Paillier modulus bits")->capture_default_str();
  bench->add_option("--bit-width", bench_bits, "Weight bit width for the sweep")->capture_default_str()->check(CLI::IsMember({4, 8}));
  bench->add_option("--table-entries", bopt.table_entries, "Baby-step table entries")->capture_default_str();
  bench->add_flag("--no-he", no_he, "Skip the HE series");
  bench->add_flag("--no-dense", no_dense, "Skip the dense-form evaluation control");

  auto* attack = cli.add_subcommand("attack", "Word-presence adversaries against the trained model");
  std::size_t attack_k = 10;
  attack->add_option("-k", attack_k, "Top-k information-gain terms to attack")->capture_default_str();

  auto* defend = cli.add_subcommand("defend", "Dual-label leakage experiment with collateral training at config alpha");
  std::optional<double> defend_alpha;
  defend->add_option("--alpha", defend_alpha, "Override the config alpha");

  auto* sweep = cli.add_subcommand("sweep", "Alpha sweep of collateral training");
  std::string alphas = "0,0.25,0.5,1,2,4";
  sweep->add_option("--alphas", alphas, "Comma-separated alphas")->capture_default_str();

  auto* serve = cli.add_subcommand("serve", "Run the HTTP demo service");
  std::string host = "127.0.0.1";
  std::optional<int> port;
  bool no_encrypt = false;
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--port", port, "Override the config port");
  serve->add_flag("--no-encrypt", no_encrypt, "Disable the demo sender endpoint");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = cli.exit(e);
    return rc == 0 ? 0 : kExitError;
  }

  try {
    PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!backend.empty()) set_field(cfg, "backend", backend);
    if (!work_dir.empty()) cfg.work_dir = work_dir;
    if (defend_alpha) cfg.alpha = *defend_alpha;
    if (port) cfg.port = static_cast<std::uint16_t>(*port);
    validate(cfg);
    Workspace ws(cfg);

    if (*prepare) {
      auto r = cmd_prepare(ws);
      print({{"total", r.report.total},
             {"kept", r.report.kept},
             {"rejected", {{"too_short", r.report.rejected_too_short},
                           {"too_long", r.report.rejected_too_long},
                           {"decode", r.report.rejected_decode}}},
             {"vocabulary", r.vocabulary},
             {"features", r.features},
             {"train", r.train},
             {"test", r.test}});
    } else if (*train) {
      auto r = cmd_train(ws);
      print({{"train_accuracy", r.train_accuracy}, {"test_accuracy", r.test_accuracy}, {"epoch_loss", r.epoch_loss}});
    } else if (*quantize) {
      auto r = cmd_quantize(ws);
      print({{"bit_width", r.bit_width},
             {"float_accuracy", r.float_accuracy},
             {"quantized_accuracy", r.quantized_accuracy},
             {"max_certified_bound", r.max_bound}});
    } else if (*keygen) {
      auto r = cmd_keygen(ws);
      print({{"keys", r.keys}, {"max_certified_bound", r.max_bound}, {"table_entries", r.table_entries},
             {"mpk_sha256", r.mpk_digest}});
    } else if (*encrypt) {
      auto r = cmd_encrypt(ws, email_path, ct_out);
      print({{"id", r.id}, {"tokens", r.tokens}, {"nonzero_features", r.nonzero}, {"clamped", r.clamped},
             {"encrypt_seconds", r.encrypt_seconds}, {"ciphertext_sha256", r.ciphertext_sha256}});
    } else if (*classify_cmd) {
      auto r = cmd_classify(ws, ct_path);
      print(to_json(r));
      return exit_code(r);
    } else if (*bench) {
      bopt.sizes = parse_list<std::size_t>(sizes, "size");
      bopt.bit_width = bench_bits;
      bopt.run_he = !no_he;
      bopt.dense_control = !no_dense;
      print(to_json(cmd_bench(ws, bopt)));
    } else if (*attack) {
      auto r = cmd_attack(ws, attack_k);
      json rows = json::array();
      for (const auto& row : r.rows)
        rows.push_back({{"rank", row.rank}, {"term", row.term}, {"majority", row.majority}, {"adversary", row.adversary}});
      print(rows);
    } else if (*defend) {
      print(to_json(cmd_defend(ws)));
    } else if (*sweep) {
      auto list = parse_list<double>(alphas, "alpha");
      std::cout << leakage::render_sweep(cmd_sweep(ws, list));
    } else if (*serve) {
      auto state = load_service_state(ws, !no_encrypt);
      if (!state.server) std::cerr << "warning: serving 503 until artifacts load: " << state.load_error << "\n";
      Service svc(std::move(state), [](const std::string& line) { std::cerr << line << "\n"; });
      g_service = &svc;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on " << host << ":" << cfg.port << "\n";
      svc.run(host, cfg.port);
      g_service = nullptr;
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}
