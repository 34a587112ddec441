// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fespam {

enum class Errc {
  invalid_argument,
  decode_error,
  empty_corpus,
  unknown_term,
  n_too_large,
  degenerate_split,
  shape_mismatch,
  divergence,
  overflow,
  unsupported_curve,
  out_of_range_entry,
  bound_overflow,
  key_ciphertext_mismatch,
  invalid_group_element,
  not_in_range,
  disk_budget_exceeded,
  encoding_overflow,
  dimension_mismatch,
  invalid_ciphertext,
  k_too_large,
  degenerate_labels,
  missing_dataset,
  digest_mismatch,
  parse_error,
  io_error,
  config_error,
  backend_mismatch,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::decode_error: return "DecodeError";
    case Errc::empty_corpus: return "EmptyCorpus";
    case Errc::unknown_term: return "UnknownTerm";
    case Errc::n_too_large: return "NTooLarge";
    case Errc::degenerate_split: return "DegenerateSplit";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::divergence: return "Divergence";
    case Errc::overflow: return "Overflow";
    case Errc::unsupported_curve: return "UnsupportedCurve";
    case Errc::out_of_range_entry: return "OutOfRangeEntry";
    case Errc::bound_overflow: return "BoundOverflow";
    case Errc::key_ciphertext_mismatch: return "KeyCiphertextMismatch";
    case Errc::invalid_group_element: return "InvalidGroupElement";
    case Errc::not_in_range: return "NotInRange";
    case Errc::disk_budget_exceeded: return "DiskBudgetExceeded";
    case Errc::encoding_overflow: return "EncodingOverflow";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::invalid_ciphertext: return "InvalidCiphertext";
    case Errc::k_too_large: return "KTooLarge";
    case Errc::degenerate_labels: return "DegenerateLabels";
    case Errc::missing_dataset: return "MissingDataset";
    case Errc::digest_mismatch: return "DigestMismatch";
    case Errc::parse_error: return "ParseError";
    case Errc::io_error: return "IoError";
    case Errc::config_error: return "ConfigError";
    case Errc::backend_mismatch: return "BackendMismatch";
  }
  return "Unknown";
}

// All library failures are reported through this type; `code()` is the
// structured part callers switch on, `what()` carries context.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& detail) { throw Error(code, detail); }

inline void require(bool cond, Errc code, const std::string& detail) {
  if (!cond) fail(code, detail);
}

}  // namespace fespam
