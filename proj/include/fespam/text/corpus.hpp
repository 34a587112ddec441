// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "fespam/common/error.hpp"
#include "fespam/common/io.hpp"
#include "fespam/text/preprocess.hpp"
#include "fespam/text/vocabulary.hpp"

namespace fespam::text {

namespace fs = std::filesystem;

// Splits a stored message into subject and body. Accepts either an RFC 822
// style header block (Subject: is picked out, other headers dropped) or an
// Enron-style "Subject: ..." first line followed by the body.
inline RawEmail parse_message(std::string id, std::string content, Label label) {
  content = latin1_to_utf8_if_needed(std::move(content));
  RawEmail e{std::move(id), "", "", label};
  std::istringstream in(content);
  std::string line;
  std::string body;
  bool in_headers = false;
  bool first = true;
  bool looks_html = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first) {
      first = false;
      bool header_like = line.find(':') != std::string::npos && line.find(' ') > line.find(':');
      if (line.rfind("Subject:", 0) == 0) {
        e.subject = line.substr(8);
        // Enron files put the body right after the subject line.
        continue;
      }
      if (header_like) {
        in_headers = true;
        continue;
      }
    }
    if (in_headers) {
      if (line.empty()) {
        in_headers = false;
      } else if (line.rfind("Subject:", 0) == 0) {
        e.subject = line.substr(8);
      } else if (line.rfind("Content-Type:", 0) == 0 && line.find("html") != std::string::npos) {
        looks_html = true;
      }
      continue;
    }
    body += line;
    body += '\n';
  }
  if (looks_html || body.find("<html") != std::string::npos || body.find("<HTML") != std::string::npos)
    body = strip_html(body);
  e.body = std::move(body);
  return e;
}

// <root>/spam/*.txt and <root>/ham/*.txt, or a TREC-style <root>/full/index.
inline std::vector<RawEmail> load_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) fail(Errc::missing_dataset, "dataset root '" + root.string() + "' does not exist");
  std::vector<RawEmail> out;
  auto index = root / "full" / "index";
  if (fs::is_regular_file(index)) {
    std::istringstream in(read_text(index));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream row(line);
      std::string label, rel;
      if (!(row >> label >> rel)) fail(Errc::parse_error, "malformed index line: " + line);
      std::transform(label.begin(), label.end(), label.begin(), [](unsigned char c) { return std::tolower(c); });
      auto path = (index.parent_path() / rel).lexically_normal();
      out.push_back(parse_message(rel, read_text(path), parse_label(label)));
    }
  } else {
    for (Label label : {Label::ham, Label::spam}) {
      auto dir = root / std::string(to_string(label));
      if (!fs::is_directory(dir)) continue;
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files)
        out.push_back(parse_message(std::string(to_string(label)) + "/" + f.filename().string(), read_text(f), label));
    }
  }
  if (out.empty()) fail(Errc::missing_dataset, "no emails found under '" + root.string() + "'");
  return out;
}

// Processed corpus: header, then "id<TAB>label<TAB>tok tok tok" per email.
inline std::string serialize_corpus(std::span<const TokenizedEmail> corpus) {
  std::ostringstream out;
  out << "format_version: 1\nkind: corpus\nemails: " << corpus.size() << "\n";
  for (const auto& e : corpus) {
    if (e.id.find_first_of("\t\n") != std::string::npos) fail(Errc::invalid_argument, "email id contains tab/newline");
    out << e.id << '\t' << to_string(e.label) << '\t';
    for (std::size_t i = 0; i < e.tokens.size(); ++i) out << (i ? " " : "") << e.tokens[i];
    out << '\n';
  }
  return out.str();
}

inline std::vector<TokenizedEmail> parse_corpus(const std::string& text) {
  std::istringstream in(text);
  if (detail::expect_header(in, "format_version") != "1") fail(Errc::parse_error, "unsupported corpus version");
  if (detail::expect_header(in, "kind") != "corpus") fail(Errc::parse_error, "not a corpus file");
  auto count = detail::parse_u64(detail::expect_header(in, "emails"));
  std::vector<TokenizedEmail> out;
  std::string line;
  while (std::getline(in, line)) {
    auto t1 = line.find('\t');
    auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) fail(Errc::parse_error, "malformed corpus row");
    TokenizedEmail e;
    e.id = line.substr(0, t1);
    e.label = parse_label(line.substr(t1 + 1, t2 - t1 - 1));
    std::istringstream toks(line.substr(t2 + 1));
    std::string tok;
    while (toks >> tok) e.tokens.push_back(tok);
    out.push_back(std::move(e));
  }
  if (out.size() != count) fail(Errc::parse_error, "corpus email count mismatch");
  return out;
}

struct PrepareReport {
  std::size_t total = 0;
  std::size_t kept = 0;
  std::size_t rejected_too_short = 0;
  std::size_t rejected_too_long = 0;
  std::size_t rejected_decode = 0;
};

inline std::vector<TokenizedEmail> preprocess_all(std::span<const RawEmail> raw, PrepareReport& report,
                                                  const PreprocessOptions& opts = {}) {
  std::vector<TokenizedEmail> out;
  report = {};
  report.total = raw.size();
  for (const auto& r : raw) {
    PreprocessResult res;
    try {
      res = preprocess(r, opts);
    } catch (const Error& e) {
      if (e.code() != Errc::decode_error) throw;
      ++report.rejected_decode;
      continue;
    }
    if (res.accepted()) {
      out.push_back(std::move(*res.email));
      ++report.kept;
    } else if (res.reason == RejectReason::too_short) {
      ++report.rejected_too_short;
    } else {
      ++report.rejected_too_long;
    }
  }
  return out;
}

}  // namespace fespam::text
