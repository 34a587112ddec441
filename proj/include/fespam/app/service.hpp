// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// HTTP demo service.
//
//   POST /v1/classify  {"id", "ciphertext": base64, "ciphertext_sha256",
//                       optional "mpk_sha256", "model_sha256"}
//                      -> {"id", "label", "action", "spam_probability",
//                          "backend", "timings"}
//   POST /v1/encrypt   {"id", "email": base64 message} -> classify envelope
//   GET  /v1/health    -> artifact digests
//
// 400 malformed payload, 409 digest or key mismatch, 503 artifacts not
// loaded. The request log carries method, path, status and sizes only.
// /v1/encrypt stands in for the sender's client and is the one route that
// touches plaintext; it can be switched off.

#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "fespam/app/classifier.hpp"
#include "fespam/app/commands.hpp"
#include "fespam/common/base64.hpp"

namespace fespam::app {

struct HttpReply {
  int status = 200;
  nlohmann::json body;
};

struct ServiceState {
  std::shared_ptr<const ServerState> server;  // null: not loaded
  std::string load_error;
  // Demo sender; null when /v1/encrypt is disabled or keys are missing.
  std::shared_ptr<const SenderState> sender;
  std::shared_ptr<const PipelineConfig> config;
};

inline HttpReply error_reply(int status, std::string_view code, const std::string& message) {
  return {status, {{"error", std::string(code)}, {"message", message}}};
}

inline int status_for(Errc e) {
  switch (e) {
    case Errc::digest_mismatch:
    case Errc::key_ciphertext_mismatch:
    case Errc::backend_mismatch:
      return 409;
    default:
      return 400;
  }
}

inline HttpReply handle_health(const ServiceState& st) {
  if (!st.server) return {503, {{"status", "unavailable"}, {"message", st.load_error}}};
  nlohmann::json j;
  j["status"] = "ok";
  j["backend"] = fe::to_string(st.server->backend);
  j["config_digest"] = st.server->config_digest;
  j["mpk_digest"] = to_hex(st.server->mpk_digest);
  j["artifacts"] = st.server->digests;
  j["encrypt_enabled"] = st.sender != nullptr;
  return {200, j};
}

inline HttpReply handle_classify(const ServiceState& st, const std::string& body) {
  if (!st.server) return error_reply(503, "Unavailable", "artifacts are not loaded: " + st.load_error);
  const auto& s = *st.server;
  nlohmann::json req;
  try {
    req = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    return error_reply(400, "MalformedPayload", "request body is not JSON");
  }
  if (!req.is_object() || !req.contains("ciphertext") || !req["ciphertext"].is_string() ||
      !req.contains("ciphertext_sha256") || !req["ciphertext_sha256"].is_string())
    return error_reply(400, "MalformedPayload", "envelope needs string fields 'ciphertext' and 'ciphertext_sha256'");
  std::string id = req.contains("id") && req["id"].is_string() ? req["id"].get<std::string>() : "";
  try {
    auto bytes = base64_decode(req["ciphertext"].get<std::string>());
    if (to_hex(sha256(bytes)) != req["ciphertext_sha256"].get<std::string>())
      return error_reply(400, "MalformedPayload", "ciphertext does not match ciphertext_sha256");
    auto check = [&](const char* field, const std::string& have) -> std::optional<HttpReply> {
      if (!req.contains(field)) return std::nullopt;
      if (!req[field].is_string()) return error_reply(400, "MalformedPayload", std::string(field) + " must be a string");
      if (req[field].get<std::string>() != have)
        return error_reply(409, "DigestMismatch", std::string(field) + " does not match the loaded artifacts");
      return std::nullopt;
    };
    if (auto r = check("mpk_sha256", s.digests.at(artifact::mpk))) return *r;
    if (auto r = check("model_sha256", s.digests.at(artifact::model))) return *r;
    auto ct = fe::Ciphertext::parse(bytes);
    auto rec = classify(s, ct, id);
    auto j = to_json(rec);
    j["action"] = rec.label == text::Label::spam ? "withhold" : "forward";
    return {200, j};
  } catch (const Error& e) {
    return error_reply(status_for(e.code()), to_string(e.code()), e.what());
  }
}

inline HttpReply handle_encrypt(const ServiceState& st, const std::string& body) {
  if (!st.sender) return error_reply(503, "Unavailable", "encryption endpoint is disabled or keys are not loaded");
  nlohmann::json req;
  try {
    req = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    return error_reply(400, "MalformedPayload", "request body is not JSON");
  }
  if (!req.is_object() || !req.contains("email") || !req["email"].is_string())
    return error_reply(400, "MalformedPayload", "envelope needs a base64 string field 'email'");
  std::string id = req.contains("id") && req["id"].is_string() ? req["id"].get<std::string>() : "";
  try {
    auto raw = base64_decode(req["email"].get<std::string>());
    auto sealed = encrypt_message(st.sender->mpk, st.sender->features, *st.config, id, std::string(raw.begin(), raw.end()));
    auto bytes = sealed.ct.serialize();
    return {200,
            {{"id", id},
             {"ciphertext", base64_encode(bytes)},
             {"ciphertext_sha256", to_hex(sha256(bytes))},
             {"mpk_sha256", to_hex(st.sender->mpk.digest())},
             {"encrypt_seconds", sealed.encrypt_seconds}}};
  } catch (const Error& e) {
    return error_reply(status_for(e.code()), to_string(e.code()), e.what());
  }
}

// Loads whatever the workspace holds. A failed load leaves the service up
// and answering 503, so health checks can say why.
inline ServiceState load_service_state(const Workspace& ws, bool enable_encrypt) {
  ServiceState st;
  st.config = std::make_shared<PipelineConfig>(ws.config());
  try {
    st.server = std::make_shared<ServerState>(load_server_state(ws));
  } catch (const Error& e) {
    st.load_error = e.what();
  }
  if (enable_encrypt) {
    try {
      st.sender = std::make_shared<SenderState>(load_sender_state(ws));
    } catch (const Error&) {
    }
  }
  return st;
}

using LogSink = std::function<void(const std::string&)>;

class Service {
 public:
  Service(ServiceState state, LogSink log = {}) : state_(std::move(state)), log_(std::move(log)) {
    srv_.set_payload_max_length(std::size_t{256} << 20);
    auto reply = [](httplib::Response& res, const HttpReply& r) {
      res.status = r.status;
      res.set_content(r.body.dump(), "application/json");
    };
    srv_.Get("/v1/health", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, handle_health(state_)); });
    srv_.Post("/v1/classify", [this, reply](const httplib::Request& req, httplib::Response& res) {
      reply(res, handle_classify(state_, req.body));
    });
    srv_.Post("/v1/encrypt", [this, reply](const httplib::Request& req, httplib::Response& res) {
      reply(res, handle_encrypt(state_, req.body));
    });
    // Never the bodies: they carry ciphertexts and, for /v1/encrypt, email text.
    srv_.set_logger([this](const httplib::Request& req, const httplib::Response& res) {
      if (!log_) return;
      log_(req.method + " " + req.path + " " + std::to_string(res.status) + " in=" + std::to_string(req.body.size()) +
           "B out=" + std::to_string(res.body.size()) + "B");
    });
  }

  ~Service() { stop(); }

  // Binds and serves on a background thread; returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0) {
    int bound = port == 0 ? srv_.bind_to_any_port(host) : (srv_.bind_to_port(host, port) ? port : -1);
    if (bound < 0) fail(Errc::io_error, "cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { srv_.listen_after_bind(); });
    srv_.wait_until_ready();
    return bound;
  }

  // Blocks until stopped.
  void run(const std::string& host, int port) {
    if (!srv_.listen(host, port)) fail(Errc::io_error, "cannot listen on " + host + ":" + std::to_string(port));
  }

  void stop() {
    srv_.stop();
    if (thread_.joinable()) thread_.join();
  }

  const ServiceState& state() const { return state_; }

 private:
  ServiceState state_;
  LogSink log_;
  httplib::Server srv_;
  std::thread thread_;
};

}  // namespace fespam::app
