// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <optional>
#include <sstream>
#include <string>

#include "fespam/common/base64.hpp"
#include "fespam/common/digest.hpp"
#include "fespam/common/error.hpp"
#include "fespam/nn/quantize.hpp"

namespace fespam::nn {

// Everything a deployment needs from training: the float network, the
// integer encrypted part keys are derived from, and provenance.
struct ModelBundle {
  QuadNetParams params;
  std::optional<QuantizedEncryptedPart> quantized;
  std::uint64_t train_seed = 0;
  std::string config_digest;  // hex, may be empty
  std::string weighting = "counts";

  friend bool operator==(const ModelBundle&, const ModelBundle&) = default;
};

namespace detail {

inline std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  if (s.empty()) fail(Errc::parse_error, "empty number");
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) fail(Errc::parse_error, "bad number '" + s + "'");
  return v;
}

inline std::uint64_t parse_count(const std::string& s, std::uint64_t max) {
  if (s.empty() || s.size() > 19 || s.find_first_not_of("0123456789") != std::string::npos)
    fail(Errc::parse_error, "bad count '" + s + "'");
  auto v = std::stoull(s);
  if (v > max) fail(Errc::parse_error, "count " + s + " out of range");
  return v;
}

template <typename T>
std::string encode_payload(std::span<const T> values) {
  std::vector<std::uint8_t> bytes(values.size() * sizeof(T));
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t bits = 0;
    if constexpr (sizeof(T) == 8) std::memcpy(&bits, &values[i], 8);
    else bits = static_cast<std::uint32_t>(values[i]);
    for (std::size_t b = 0; b < sizeof(T); ++b) bytes[i * sizeof(T) + b] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  return base64_encode(bytes);
}

template <typename T>
std::vector<T> decode_payload(const std::string& text, std::size_t count) {
  auto bytes = base64_decode(text);
  if (bytes.size() != count * sizeof(T)) fail(Errc::parse_error, "matrix payload has the wrong length");
  std::vector<T> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (std::size_t b = 0; b < sizeof(T); ++b) bits |= std::uint64_t{bytes[i * sizeof(T) + b]} << (8 * b);
    if constexpr (sizeof(T) == 8) std::memcpy(&out[i], &bits, 8);
    else out[i] = static_cast<T>(static_cast<std::uint32_t>(bits));
  }
  return out;
}

class ModelWriter {
 public:
  void field(const std::string& key, const std::string& value) { out_ << key << ": " << value << '\n'; }
  void matrix(const std::string& name, const Matrix& m) {
    out_ << "matrix " << name << " f64 " << m.rows() << ' ' << m.cols() << ' ' << encode_payload(m.flat()) << '\n';
  }
  void vector(const std::string& name, const std::vector<double>& v) {
    out_ << "matrix " << name << " f64 " << v.size() << " 1 " << encode_payload(std::span<const double>(v)) << '\n';
  }
  void matrix(const std::string& name, const IntMatrix& m) {
    out_ << "matrix " << name << " i32 " << m.rows() << ' ' << m.cols() << ' ' << encode_payload(m.flat()) << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

class ModelReader {
 public:
  explicit ModelReader(const std::string& text) : in_(text) {}

  std::string field(const std::string& key) {
    std::string line = next();
    std::string prefix = key + ": ";
    if (line.rfind(prefix, 0) != 0) fail(Errc::parse_error, "expected field '" + key + "'");
    return line.substr(prefix.size());
  }

  template <typename T>
  BasicMatrix<T> matrix(const std::string& name, std::size_t rows, std::size_t cols) {
    std::istringstream row(next());
    std::string tag, got_name, type, payload;
    std::size_t r = 0, c = 0;
    if (!(row >> tag >> got_name >> type >> r >> c >> payload) || tag != "matrix")
      fail(Errc::parse_error, "malformed matrix record for " + name);
    std::string want = sizeof(T) == 8 ? "f64" : "i32";
    if (got_name != name || type != want) fail(Errc::parse_error, "expected matrix " + name + " " + want);
    if (r != rows || c != cols) fail(Errc::parse_error, "matrix " + name + " has unexpected shape");
    return BasicMatrix<T>(rows, cols, decode_payload<T>(payload, rows * cols));
  }

  std::vector<double> vector(const std::string& name, std::size_t len) {
    auto m = matrix<double>(name, len, 1);
    return {m.flat().begin(), m.flat().end()};
  }

  std::string next() {
    std::string line;
    if (!std::getline(in_, line)) fail(Errc::parse_error, "model file truncated");
    return line;
  }

 private:
  std::istringstream in_;
};

}  // namespace detail

inline std::string serialize_model(const ModelBundle& m) {
  const auto& h = m.params.hyper;
  detail::ModelWriter w;
  w.field("fespam-model format_version", "1");
  w.field("n", std::to_string(h.n));
  w.field("hidden", std::to_string(h.hidden));
  w.field("outputs", std::to_string(h.outputs));
  w.field("plain_hidden", std::to_string(h.plain_hidden));
  w.field("labels", std::to_string(h.labels));
  w.field("weighting", m.weighting);
  w.field("train_seed", std::to_string(m.train_seed));
  w.field("config_digest", m.config_digest.empty() ? "-" : m.config_digest);
  w.field("quantized", m.quantized ? "yes" : "no");
  if (m.quantized) {
    w.field("bit_width", std::to_string(m.quantized->bit_width));
    w.field("scale_projection", detail::hexfloat(m.quantized->scale_projection));
    w.field("scale_quadratic", detail::hexfloat(m.quantized->scale_quadratic));
  }
  w.matrix("fe.projection", m.params.fe.projection);
  w.matrix("fe.quadratic", m.params.fe.quadratic);
  for (std::size_t i = 0; i < m.params.plain.layers.size(); ++i) {
    w.matrix("plain." + std::to_string(i) + ".w", m.params.plain.layers[i].w);
    w.vector("plain." + std::to_string(i) + ".b", m.params.plain.layers[i].b);
  }
  if (m.quantized) {
    w.matrix("q.projection", m.quantized->projection);
    w.matrix("q.quadratic", m.quantized->quadratic);
  }
  return w.str() + "end\n";
}

inline ModelBundle parse_model(const std::string& text) {
  detail::ModelReader r(text);
  if (r.field("fespam-model format_version") != "1") fail(Errc::parse_error, "unsupported model version");
  ModelBundle m;
  auto& h = m.params.hyper;
  constexpr std::uint64_t kMaxDim = 1'000'000;
  h.n = detail::parse_count(r.field("n"), kMaxDim);
  h.hidden = detail::parse_count(r.field("hidden"), 4096);
  h.outputs = detail::parse_count(r.field("outputs"), 4096);
  h.plain_hidden = detail::parse_count(r.field("plain_hidden"), 4096);
  h.labels = detail::parse_count(r.field("labels"), 2);
  if (h.n == 0 || h.hidden == 0 || h.outputs == 0 || h.plain_hidden == 0 || h.labels != 2)
    fail(Errc::parse_error, "invalid model dimensions");
  m.weighting = r.field("weighting");
  if (m.weighting != "counts" && m.weighting != "binary") fail(Errc::parse_error, "unknown weighting");
  m.train_seed = detail::parse_count(r.field("train_seed"), UINT64_MAX);
  m.config_digest = r.field("config_digest");
  if (m.config_digest == "-") m.config_digest.clear();
  auto quantized = r.field("quantized");
  if (quantized != "yes" && quantized != "no") fail(Errc::parse_error, "bad quantized flag");
  QuantizedEncryptedPart qp;
  if (quantized == "yes") {
    qp.bit_width = static_cast<int>(detail::parse_count(r.field("bit_width"), 8));
    if (qp.bit_width != 4 && qp.bit_width != 8) fail(Errc::parse_error, "bit width must be 4 or 8");
    qp.scale_projection = detail::parse_double(r.field("scale_projection"));
    qp.scale_quadratic = detail::parse_double(r.field("scale_quadratic"));
    if (!(qp.scale_projection > 0) || !(qp.scale_quadratic > 0) || !std::isfinite(qp.scale_projection) ||
        !std::isfinite(qp.scale_quadratic))
      fail(Errc::parse_error, "scales must be positive and finite");
  }
  m.params.fe.projection = r.matrix<double>("fe.projection", h.hidden, h.n + 1);
  m.params.fe.quadratic = r.matrix<double>("fe.quadratic", h.outputs, h.hidden);
  std::array<std::size_t, 3> widths{h.outputs, h.plain_hidden, h.labels};
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    Dense d;
    d.w = r.matrix<double>("plain." + std::to_string(i) + ".w", widths[i + 1], widths[i]);
    d.b = r.vector("plain." + std::to_string(i) + ".b", widths[i + 1]);
    m.params.plain.layers.push_back(std::move(d));
  }
  if (quantized == "yes") {
    qp.projection = r.matrix<std::int32_t>("q.projection", h.hidden, h.n + 1);
    qp.quadratic = r.matrix<std::int32_t>("q.quadratic", h.outputs, h.hidden);
    const std::int32_t qmax = (1 << (qp.bit_width - 1)) - 1;
    for (const IntMatrix* mat : {&qp.projection, &qp.quadratic})
      for (auto v : mat->flat())
        if (v > qmax || v < -qmax) fail(Errc::parse_error, "quantized weight exceeds bit width");
    m.quantized = std::move(qp);
  }
  if (r.next() != "end") fail(Errc::parse_error, "missing end marker");
  return m;
}

}  // namespace fespam::nn
