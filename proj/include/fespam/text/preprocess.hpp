// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fespam/common/error.hpp"
#include "fespam/text/feature_vector.hpp"
#include "fespam/text/porter_stemmer.hpp"

namespace fespam::text {

struct RawEmail {
  std::string id;
  std::string subject;
  std::string body;
  Label label = Label::ham;
};

struct TokenizedEmail {
  std::string id;
  std::vector<std::string> tokens;
  Label label = Label::ham;

  friend bool operator==(const TokenizedEmail&, const TokenizedEmail&) = default;
};

struct PreprocessOptions {
  std::size_t max_token_length = 15;
  std::size_t min_tokens = 10;
  std::size_t max_tokens = 100;
};

enum class RejectReason : std::uint8_t { too_short, too_long };

constexpr std::string_view to_string(RejectReason r) noexcept {
  return r == RejectReason::too_short ? "too_short" : "too_long";
}

struct PreprocessResult {
  std::optional<TokenizedEmail> email;
  RejectReason reason = RejectReason::too_short;  // meaningful only when !email

  bool accepted() const noexcept { return email.has_value(); }
};

inline bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    if (c == 0) return false;
    std::size_t extra = 0;
    if (c < 0x80) extra = 0;
    else if ((c >> 5) == 0x6) extra = 1;
    else if ((c >> 4) == 0xE) extra = 2;
    else if ((c >> 3) == 0x1E) extra = 3;
    else return false;
    if (i + extra >= s.size() && extra > 0) return false;
    for (std::size_t k = 1; k <= extra; ++k)
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return false;
    i += extra + 1;
  }
  return true;
}

// Splits on whitespace, then per raw token: lowercase, strip punctuation,
// drop tokens with digits, drop overlong tokens, stem.
inline std::vector<std::string> tokenize(std::string_view text, const PreprocessOptions& opts = {}) {
  static const PorterStemmer stem;
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    bool has_digit = false;
    std::string kept;
    for (char ch : word) {
      auto c = static_cast<unsigned char>(ch);
      if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
      if (c >= '0' && c <= '9') has_digit = true;
      else if (c >= 'a' && c <= 'z') kept.push_back(static_cast<char>(c));
    }
    word.clear();
    if (has_digit || kept.empty() || kept.size() > opts.max_token_length) return;
    out.push_back(stem(kept));
  };
  for (char ch : text) {
    if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\f' || ch == '\v') {
      if (!word.empty()) flush();
    } else {
      word.push_back(ch);
    }
  }
  if (!word.empty()) flush();
  return out;
}

inline PreprocessResult preprocess(const RawEmail& raw, const PreprocessOptions& opts = {}) {
  if (!is_valid_utf8(raw.subject) || !is_valid_utf8(raw.body))
    fail(Errc::decode_error, "email '" + raw.id + "' is not valid UTF-8 text");
  auto tokens = tokenize(raw.subject, opts);
  auto body = tokenize(raw.body, opts);
  tokens.insert(tokens.end(), std::make_move_iterator(body.begin()), std::make_move_iterator(body.end()));

  PreprocessResult r;
  if (tokens.size() < opts.min_tokens) {
    r.reason = RejectReason::too_short;
    return r;
  }
  if (tokens.size() > opts.max_tokens) {
    r.reason = RejectReason::too_long;
    return r;
  }
  r.email = TokenizedEmail{raw.id, std::move(tokens), raw.label};
  return r;
}

// Inverse of tokenization for already-normalized streams.
inline RawEmail render(const TokenizedEmail& e) {
  RawEmail raw{e.id, "", "", e.label};
  for (std::size_t i = 0; i < e.tokens.size(); ++i) {
    if (i) raw.body += ' ';
    raw.body += e.tokens[i];
  }
  return raw;
}

// Crude tag stripper for HTML bodies; entities other than the common five
// become a space.
inline std::string strip_html(std::string_view html) {
  std::string out;
  out.reserve(html.size());
  bool in_tag = false;
  for (std::size_t i = 0; i < html.size(); ++i) {
    char c = html[i];
    if (in_tag) {
      if (c == '>') {
        in_tag = false;
        out.push_back(' ');
      }
      continue;
    }
    if (c == '<') {
      in_tag = true;
      continue;
    }
    if (c == '&') {
      auto semi = html.find(';', i);
      if (semi != std::string_view::npos && semi - i <= 8) {
        auto ent = html.substr(i + 1, semi - i - 1);
        if (ent == "amp") out.push_back('&');
        else if (ent == "lt") out.push_back('<');
        else if (ent == "gt") out.push_back('>');
        else if (ent == "quot") out.push_back('"');
        else if (ent == "apos") out.push_back('\'');
        else out.push_back(' ');
        i = semi;
        continue;
      }
    }
    out.push_back(c);
  }
  return out;
}

// Re-encodes bytes that are not valid UTF-8 as Latin-1.
inline std::string latin1_to_utf8_if_needed(std::string s) {
  std::string cleaned;
  cleaned.reserve(s.size());
  for (char c : s)
    if (c != '\0') cleaned.push_back(c);
  if (is_valid_utf8(cleaned)) return cleaned;
  std::string out;
  out.reserve(cleaned.size() * 2);
  for (char ch : cleaned) {
    auto c = static_cast<unsigned char>(ch);
    if (c < 0x80) {
      out.push_back(ch);
    } else {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
  return out;
}

}  // namespace fespam::text
