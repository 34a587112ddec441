// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Pipeline configuration: a versioned "key = value" text file. Every key
// is known and validated; anything else is rejected.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "fespam/common/digest.hpp"
#include "fespam/common/error.hpp"
#include "fespam/common/io.hpp"
#include "fespam/fe/bound.hpp"
#include "fespam/fe/scheme.hpp"
#include "fespam/text/feature_vector.hpp"

namespace fespam::app {

inline constexpr int kConfigVersion = 1;

struct PipelineConfig {
  int format_version = kConfigVersion;
  // "synthetic" generates the bundled corpus; anything else is a directory.
  std::string dataset = "synthetic";
  std::size_t synthetic_emails = 2000;
  std::uint64_t synthetic_seed = 7;
  std::size_t synthetic_background_terms = 600;  // shared Zipfian vocabulary
  std::size_t features = 100;
  std::string weighting = "binary";
  int bit_width = 8;
  double split_ratio = 0.7;
  std::uint64_t split_seed = 1;
  std::uint64_t seed = 1;
  // "seeded" derives key and ciphertext randomness from seed, so reruns are
  // byte-identical; "os" draws from the system CSPRNG.
  std::string randomness = "seeded";
  std::size_t train_epochs = 40;
  double learning_rate = 0.05;
  fe::Backend backend = fe::Backend::pairing;
  std::string curve = std::string(fe::kBls12381);
  std::uint32_t x_max = 1;
  std::uint64_t dlog_capacity = fe::kDefaultDlogCapacity;
  std::uint64_t table_entries = std::uint64_t{1} << 20;
  std::uint64_t table_budget_bytes = std::uint64_t{1} << 30;
  std::uint16_t port = 8080;
  std::string work_dir = "fespam-work";
  double alpha = 1.0;

  text::TermWeighting term_weighting() const {
    return weighting == "binary" ? text::TermWeighting::binary : text::TermWeighting::counts;
  }
};

namespace detail {

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) fail(Errc::config_error, "'" + key + "' expects a number, got '" + v + "'");
  return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  fail(Errc::config_error, "'" + key + "' expects a real number, got '" + v + "'");
}

inline std::string trim(std::string s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline void validate(const PipelineConfig& c) {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) fail(Errc::config_error, msg);
  };
  need(c.format_version == kConfigVersion, "unsupported config format_version " + std::to_string(c.format_version));
  need(!c.dataset.empty(), "dataset must be set");
  need(c.synthetic_emails >= 20, "synthetic_emails must be >= 20");
  need(c.synthetic_background_terms >= 10, "synthetic_background_terms must be >= 10");
  need(c.features >= 1 && c.features <= fe::kMaxDimension - 1, "features out of range");
  need(c.weighting == "counts" || c.weighting == "binary", "weighting must be counts or binary");
  need(c.bit_width == 4 || c.bit_width == 8, "bit_width must be 4 or 8");
  need(c.split_ratio > 0 && c.split_ratio < 1, "split_ratio must be in (0, 1)");
  need(c.randomness == "seeded" || c.randomness == "os", "randomness must be seeded or os");
  need(c.train_epochs >= 1, "train_epochs must be >= 1");
  need(c.learning_rate > 0, "learning_rate must be positive");
  need(c.curve == fe::curve_of(c.backend), "curve '" + c.curve + "' does not belong to backend " + fe::to_string(c.backend));
  need(c.x_max >= 1, "x_max must be >= 1");
  need(c.dlog_capacity >= 1, "dlog_capacity must be >= 1");
  need(c.table_entries >= 1 && c.table_entries <= (std::uint64_t{1} << 32), "table_entries must be in [1, 2^32]");
  need(!c.work_dir.empty(), "work_dir must be set");
  need(c.alpha >= 0, "alpha must be non-negative");
}

// Key -> (read, write) over a config, in a fixed order for rendering.
struct Field {
  const char* key;
  bool pipeline;  // part of the artifact digest
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

inline const std::vector<Field>& fields() {
  using detail::parse_number;
  using detail::parse_real;
  auto real = [](double v) {
    std::ostringstream o;
    o.precision(17);
    o << v;
    return o.str();
  };
  static const std::vector<Field> f{
      {"format_version", false, [](auto& c, auto& v) { c.format_version = parse_number<int>("format_version", v); },
       [](auto& c) { return std::to_string(c.format_version); }},
      {"dataset", true, [](auto& c, auto& v) { c.dataset = v; }, [](auto& c) { return c.dataset; }},
      {"synthetic_emails", true, [](auto& c, auto& v) { c.synthetic_emails = parse_number<std::size_t>("synthetic_emails", v); },
       [](auto& c) { return std::to_string(c.synthetic_emails); }},
      {"synthetic_seed", true, [](auto& c, auto& v) { c.synthetic_seed = parse_number<std::uint64_t>("synthetic_seed", v); },
       [](auto& c) { return std::to_string(c.synthetic_seed); }},
      {"synthetic_background_terms", true,
       [](auto& c, auto& v) { c.synthetic_background_terms = parse_number<std::size_t>("synthetic_background_terms", v); },
       [](auto& c) { return std::to_string(c.synthetic_background_terms); }},
      {"features", true, [](auto& c, auto& v) { c.features = parse_number<std::size_t>("features", v); },
       [](auto& c) { return std::to_string(c.features); }},
      {"weighting", true, [](auto& c, auto& v) { c.weighting = v; }, [](auto& c) { return c.weighting; }},
      {"bit_width", true, [](auto& c, auto& v) { c.bit_width = parse_number<int>("bit_width", v); },
       [](auto& c) { return std::to_string(c.bit_width); }},
      {"split_ratio", true, [](auto& c, auto& v) { c.split_ratio = parse_real("split_ratio", v); },
       [real](auto& c) { return real(c.split_ratio); }},
      {"split_seed", true, [](auto& c, auto& v) { c.split_seed = parse_number<std::uint64_t>("split_seed", v); },
       [](auto& c) { return std::to_string(c.split_seed); }},
      {"seed", true, [](auto& c, auto& v) { c.seed = parse_number<std::uint64_t>("seed", v); },
       [](auto& c) { return std::to_string(c.seed); }},
      {"randomness", true, [](auto& c, auto& v) { c.randomness = v; }, [](auto& c) { return c.randomness; }},
      {"train_epochs", true, [](auto& c, auto& v) { c.train_epochs = parse_number<std::size_t>("train_epochs", v); },
       [](auto& c) { return std::to_string(c.train_epochs); }},
      {"learning_rate", true, [](auto& c, auto& v) { c.learning_rate = parse_real("learning_rate", v); },
       [real](auto& c) { return real(c.learning_rate); }},
      {"backend", true, [](auto& c, auto& v) {
         c.backend = fe::parse_backend(v);
         c.curve = std::string(fe::curve_of(c.backend));
       }, [](auto& c) { return fe::to_string(c.backend); }},
      {"curve", true, [](auto& c, auto& v) { c.curve = v; }, [](auto& c) { return c.curve; }},
      {"x_max", true, [](auto& c, auto& v) { c.x_max = parse_number<std::uint32_t>("x_max", v); },
       [](auto& c) { return std::to_string(c.x_max); }},
      {"dlog_capacity", true, [](auto& c, auto& v) { c.dlog_capacity = parse_number<std::uint64_t>("dlog_capacity", v); },
       [](auto& c) { return std::to_string(c.dlog_capacity); }},
      {"table_entries", false, [](auto& c, auto& v) { c.table_entries = parse_number<std::uint64_t>("table_entries", v); },
       [](auto& c) { return std::to_string(c.table_entries); }},
      {"table_budget_bytes", false,
       [](auto& c, auto& v) { c.table_budget_bytes = parse_number<std::uint64_t>("table_budget_bytes", v); },
       [](auto& c) { return std::to_string(c.table_budget_bytes); }},
      {"port", false, [](auto& c, auto& v) { c.port = parse_number<std::uint16_t>("port", v); },
       [](auto& c) { return std::to_string(c.port); }},
      {"work_dir", false, [](auto& c, auto& v) { c.work_dir = v; }, [](auto& c) { return c.work_dir; }},
      {"alpha", false, [](auto& c, auto& v) { c.alpha = parse_real("alpha", v); }, [real](auto& c) { return real(c.alpha); }},
  };
  return f;
}

inline void set_field(PipelineConfig& c, const std::string& key, const std::string& value) {
  for (const auto& f : fields())
    if (key == f.key) {
      try {
        f.set(c, value);
      } catch (const Error& e) {
        if (e.code() == Errc::config_error) throw;
        fail(Errc::config_error, "'" + key + "': " + e.what());
      }
      return;
    }
  fail(Errc::config_error, "unknown config key '" + key + "'");
}

// '#' starts a comment; blank lines are ignored; keys may appear once.
inline PipelineConfig parse_config(const std::string& text) {
  PipelineConfig c;
  std::istringstream in(text);
  std::string line;
  std::map<std::string, int> seen;
  bool versioned = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) fail(Errc::config_error, "line " + std::to_string(lineno) + ": expected 'key = value'");
    auto key = detail::trim(line.substr(0, eq));
    auto value = detail::trim(line.substr(eq + 1));
    if (seen[key]++) fail(Errc::config_error, "line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    set_field(c, key, value);
    versioned |= key == "format_version";
  }
  if (!versioned) fail(Errc::config_error, "config lacks format_version");
  validate(c);
  return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) { return parse_config(read_text(path)); }

inline std::string render_config(const PipelineConfig& c) {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(c) + "\n";
  return out;
}

// Covers only the fields that shape artifacts, so moving the work dir or
// the port does not invalidate anything.
inline Digest config_digest(const PipelineConfig& c) {
  Sha256 h;
  h.update("fespam-config-v1\n");
  for (const auto& f : fields())
    if (f.pipeline) h.update(std::string(f.key) + "=" + f.get(c) + "\n");
  return h.finish();
}

}  // namespace fespam::app
