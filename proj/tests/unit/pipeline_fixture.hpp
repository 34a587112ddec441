// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Small end-to-end workspaces shared by the app and service tests.

#include <unistd.h>

#include <filesystem>
#include <string>

#include "fespam/app/commands.hpp"

namespace fespam::testing {

namespace fs = std::filesystem;

inline fs::path scratch_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("fespam-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// Toy pipeline: small synthetic corpus, n = 50, 4-bit, binary features.
inline app::PipelineConfig toy_config(const fs::path& dir, fe::Backend backend = fe::Backend::oracle) {
  app::PipelineConfig c;
  c.work_dir = dir.string();
  c.synthetic_emails = 400;
  c.features = 50;
  c.bit_width = 4;
  c.train_epochs = 15;
  c.backend = backend;
  c.curve = std::string(fe::curve_of(backend));
  c.table_entries = std::uint64_t{1} << 12;
  return c;
}

inline void run_pipeline(app::Workspace& ws) {
  app::cmd_prepare(ws);
  app::cmd_train(ws);
  app::cmd_quantize(ws);
  app::cmd_keygen(ws);
}

// Message files as a sender would hold them. The lexicon follows the seed,
// so the default draws fresh emails past the toy corpus from the same one.
inline std::vector<std::pair<std::string, std::string>> toy_messages(std::size_t count, std::uint64_t seed = 7,
                                                                     std::size_t skip = 400) {
  text::SpamCorpusConfig sc;
  sc.emails = skip + count;
  sc.seed = seed;
  std::vector<std::pair<std::string, std::string>> out;
  auto all = text::generate_spam_corpus(sc);
  for (std::size_t i = skip; i < all.size(); ++i)
    out.emplace_back(all[i].id, "Subject: " + all[i].subject + "\n" + all[i].body + "\n");
  return out;
}

// Label the integer plaintext path assigns to a message.
inline text::Label plaintext_label(const app::Workspace& ws, const std::string& id, const std::string& content) {
  auto model = app::load_model(ws);
  auto features = text::parse_vocabulary(ws.read_text(app::artifact::features));
  auto x = app::featurize(app::tokenize_message(id, content), features, ws.config()).x;
  const auto& qp = *model.quantized;
  return nn::predict_from_intermediate(nn::forward_encryptedpart_int(x, qp), qp, model.params.plain).label;
}

}  // namespace fespam::testing
