// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Server-side classification. Inputs are ciphertexts, functional keys and
// the model, never email text. The message parser and the sender code stay
// out of this header's includes; a test checks that.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fespam/app/artifacts.hpp"
#include "fespam/common/timer.hpp"
#include "fespam/fe/scheme.hpp"
#include "fespam/nn/model_file.hpp"

namespace fespam::app {

struct PhaseTimings {
  std::optional<double> encrypt;  // only known when this process encrypted
  double evaluate = 0;
  double dlog = 0;
  double plaintext_part = 0;

  double total() const { return encrypt.value_or(0) + evaluate + dlog + plaintext_part; }
};

struct ClassificationRecord {
  std::string id;
  text::Label label = text::Label::ham;
  double spam_probability = 0;
  PhaseTimings timings;
  fe::Backend backend = fe::Backend::pairing;
};

inline constexpr int kExitHam = 0;
inline constexpr int kExitSpam = 10;
inline constexpr int kExitError = 1;

inline int exit_code(const ClassificationRecord& r) { return r.label == text::Label::spam ? kExitSpam : kExitHam; }

inline nlohmann::json to_json(const ClassificationRecord& r, bool with_timings = true) {
  nlohmann::json j;
  j["id"] = r.id;
  j["label"] = std::string(text::to_string(r.label));
  j["spam_probability"] = r.spam_probability;
  j["backend"] = fe::to_string(r.backend);
  if (with_timings) {
    nlohmann::json t;
    t["encrypt_seconds"] = r.timings.encrypt ? nlohmann::json(*r.timings.encrypt) : nlohmann::json(nullptr);
    t["evaluate_seconds"] = r.timings.evaluate;
    t["dlog_seconds"] = r.timings.dlog;
    t["plaintext_part_seconds"] = r.timings.plaintext_part;
    j["timings"] = t;
  }
  return j;
}

// Immutable after load; shared read-only across request threads.
struct ServerState {
  nn::QuantizedEncryptedPart form;
  nn::Mlp plain;
  std::vector<fe::FunctionalKey> keys;
  fe::Backend backend = fe::Backend::pairing;
  Digest mpk_digest{};
  std::optional<fe::DlogTable<fe::Gt>> gt_table;
  std::optional<fe::DlogTable<fe::OracleElem>> oracle_table;
  std::string config_digest;
  std::map<std::string, std::string> digests;  // artifact -> sha256, as verified at load

  fe::DlogTables tables() const {
    return {gt_table ? &*gt_table : nullptr, oracle_table ? &*oracle_table : nullptr};
  }
};

// Loads model, keys and table through the manifest. The master secret key
// is not read: the server only ever holds functional keys.
inline ServerState load_server_state(const Workspace& ws) {
  ServerState s;
  s.config_digest = ws.config_hex();
  auto model = nn::parse_model(ws.read_text(artifact::model));
  s.digests[artifact::model] = ws.digest_of(artifact::model);
  require(model.quantized.has_value(), Errc::invalid_argument, "model has not been quantized; run quantize");
  require(model.config_digest == ws.config_hex(), Errc::digest_mismatch, "model was trained under a different config");
  s.form = *model.quantized;
  s.plain = model.params.plain;
  const auto form_digest = nn::form_digest(s.form);
  for (std::size_t j = 0; j < s.form.outputs(); ++j) {
    auto name = artifact::key(j);
    ws.check_inputs(name);
    auto k = fe::FunctionalKey::parse(ws.read(name));
    require(k.index == j, Errc::digest_mismatch, name + " holds the key for output " + std::to_string(k.index));
    require(k.form_digest == form_digest, Errc::digest_mismatch, name + " was derived for a different model");
    if (j == 0) {
      s.backend = k.backend;
      s.mpk_digest = k.mpk_digest;
    }
    require(k.backend == s.backend && k.mpk_digest == s.mpk_digest, Errc::digest_mismatch,
            name + " belongs to a different key set");
    s.digests[name] = ws.digest_of(name);
    s.keys.push_back(std::move(k));
  }
  s.digests[artifact::mpk] = ws.digest_of(artifact::mpk);
  if (ws.has(artifact::table)) {
    auto bytes = ws.read(artifact::table);
    if (s.backend == fe::Backend::pairing) s.gt_table = fe::DlogTable<fe::Gt>::parse(bytes);
    else s.oracle_table = fe::DlogTable<fe::OracleElem>::parse(bytes);
    s.digests[artifact::table] = ws.digest_of(artifact::table);
  }
  return s;
}

inline ClassificationRecord classify(const ServerState& s, const fe::Ciphertext& ct, std::string id) {
  require(ct.backend == s.backend, Errc::backend_mismatch,
          "ciphertext uses the " + fe::to_string(ct.backend) + " backend, server keys use " + fe::to_string(s.backend));
  require(ct.mpk_digest == s.mpk_digest, Errc::digest_mismatch, "ciphertext was made under a different public key");
  ClassificationRecord r;
  r.id = std::move(id);
  r.backend = s.backend;
  fe::DecryptReport rep;
  std::vector<std::int64_t> q;
  try {
    q = fe::decrypt_all(s.form, ct, s.keys, s.tables(), &rep);
  } catch (const Error& e) {
    if (e.code() != Errc::not_in_range) throw;
    fail(Errc::not_in_range, "email '" + r.id + "': " + e.what() +
                                 " (the input likely exceeds x_max or the ciphertext does not match these keys)");
  }
  r.timings.evaluate = rep.evaluation_seconds;
  r.timings.dlog = rep.dlog_seconds;
  Stopwatch sw;
  auto p = nn::predict_from_intermediate(q, s.form, s.plain);
  r.timings.plaintext_part = sw.seconds();
  r.label = p.label;
  r.spam_probability = p.probs[1];
  return r;
}

}  // namespace fespam::app
