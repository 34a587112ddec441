// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Work directory and its manifest. Every artifact a command writes is
// recorded with its SHA-256, the command and seed that produced it, and
// the digests of the artifacts it was derived from. Reading an artifact
// goes through the manifest; any disagreement is a hard error.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "fespam/app/config.hpp"
#include "fespam/common/digest.hpp"
#include "fespam/common/io.hpp"

namespace fespam::app {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr const char* kManifestName = "manifest.json";

// Artifact names, relative to the work directory.
namespace artifact {
inline constexpr const char* corpus = "corpus.txt";
inline constexpr const char* vocabulary = "vocabulary.txt";
inline constexpr const char* features = "features.txt";
inline constexpr const char* split = "split.txt";
inline constexpr const char* model = "model.txt";
inline constexpr const char* mpk = "mpk.bin";
inline constexpr const char* msk = "msk.bin";
inline constexpr const char* table = "table.bin";
inline std::string key(std::size_t j) {
  auto s = std::to_string(j);
  return "keys/key-" + std::string(s.size() < 2 ? 2 - s.size() : 0, '0') + s + ".bin";
}
}  // namespace artifact

struct ArtifactRecord {
  std::string sha256;
  std::string command;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::map<std::string, std::string> inputs;  // name -> sha256 at use time
};

class Workspace {
 public:
  Workspace(PipelineConfig cfg) : cfg_(std::move(cfg)), dir_(cfg_.work_dir) {
    validate(cfg_);
    config_hex_ = to_hex(config_digest(cfg_));
    if (fs::exists(dir_ / kManifestName)) load();
  }

  const PipelineConfig& config() const { return cfg_; }
  const fs::path& dir() const { return dir_; }
  fs::path path(const std::string& name) const { return dir_ / name; }
  const std::string& config_hex() const { return config_hex_; }

  bool has(const std::string& name) const { return records_.count(name) > 0; }

  const ArtifactRecord& record(const std::string& name) const {
    auto it = records_.find(name);
    if (it == records_.end())
      fail(Errc::io_error, "artifact '" + name + "' is missing from " + (dir_ / kManifestName).string() +
                               "; run the command that produces it first");
    return it->second;
  }

  // Checks the file against the manifest and the current config, then
  // returns its bytes. Callers never read artifacts any other way.
  std::vector<std::uint8_t> read(const std::string& name) const {
    const auto& r = record(name);
    if (r.config_digest != config_hex_)
      fail(Errc::digest_mismatch, "artifact '" + name + "' was produced under a different config (" +
                                      r.config_digest.substr(0, 12) + " vs " + config_hex_.substr(0, 12) +
                                      "); rerun the pipeline from prepare");
    auto bytes = read_binary(path(name));
    auto got = to_hex(sha256(bytes));
    if (got != r.sha256)
      fail(Errc::digest_mismatch, "artifact '" + name + "' has sha256 " + got.substr(0, 12) + ", manifest records " +
                                      r.sha256.substr(0, 12));
    return bytes;
  }

  std::string read_text(const std::string& name) const {
    auto b = read(name);
    return {b.begin(), b.end()};
  }

  std::string digest_of(const std::string& name) const { return record(name).sha256; }

  // Writes the artifact and records it. `inputs` are artifact names whose
  // current digests become part of the record.
  void write(const std::string& name, std::span<const std::uint8_t> bytes, const std::string& command,
             const std::vector<std::string>& inputs = {}) {
    ArtifactRecord r;
    r.sha256 = to_hex(sha256(bytes));
    r.command = command;
    r.seed = cfg_.seed;
    r.config_digest = config_hex_;
    for (const auto& in : inputs) r.inputs[in] = digest_of(in);
    write_binary(path(name), bytes);
    records_[name] = std::move(r);
    save();
  }

  void write(const std::string& name, std::string_view text, const std::string& command,
             const std::vector<std::string>& inputs = {}) {
    write(name, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()), command,
          inputs);
  }

  // Dependents recorded against an older version of `name` become stale.
  void check_inputs(const std::string& name) const {
    for (const auto& [in, digest] : record(name).inputs)
      if (!has(in) || digest_of(in) != digest)
        fail(Errc::digest_mismatch, "artifact '" + name + "' was built from a different '" + in + "'; rerun its command");
  }

  json manifest() const {
    json j;
    j["format_version"] = 1;
    j["config_digest"] = config_hex_;
    j["seed"] = cfg_.seed;
    j["randomness"] = cfg_.randomness;
    json arts = json::object();
    for (const auto& [name, r] : records_) {
      json a;
      a["sha256"] = r.sha256;
      a["command"] = r.command;
      a["seed"] = r.seed;
      a["config_digest"] = r.config_digest;
      a["inputs"] = r.inputs;
      arts[name] = a;
    }
    j["artifacts"] = arts;
    return j;
  }

 private:
  void load() {
    json j;
    try {
      j = json::parse(fespam::read_text(dir_ / kManifestName));
      if (j.at("format_version").get<int>() != 1) fail(Errc::parse_error, "unsupported manifest version");
      for (const auto& [name, a] : j.at("artifacts").items()) {
        ArtifactRecord r;
        r.sha256 = a.at("sha256").get<std::string>();
        r.command = a.at("command").get<std::string>();
        r.seed = a.at("seed").get<std::uint64_t>();
        r.config_digest = a.at("config_digest").get<std::string>();
        r.inputs = a.at("inputs").get<std::map<std::string, std::string>>();
        records_[name] = std::move(r);
      }
    } catch (const json::exception& e) {
      fail(Errc::parse_error, "manifest is malformed: " + std::string(e.what()));
    }
  }

  void save() const { write_text(dir_ / kManifestName, manifest().dump(2) + "\n"); }

  PipelineConfig cfg_;
  fs::path dir_;
  std::string config_hex_;
  std::map<std::string, ArtifactRecord> records_;
};

}  // namespace fespam::app
