// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Baby-step giant-step discrete logs over a signed range, with an optional
// persisted table of baby steps.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "fespam/common/bytes.hpp"
#include "fespam/common/digest.hpp"
#include "fespam/common/error.hpp"
#include "fespam/common/io.hpp"
#include "fespam/fe/curve.hpp"

namespace fespam::fe {

// Largest bound the search accepts; keeps 2B+1 and every step index well
// inside 64 bits.
inline constexpr std::uint64_t kMaxDlogBound = std::uint64_t{1} << 60;

// Sorted (fingerprint, exponent) pairs for base^j, j in [0, m).
template <DlogGroup G>
class DlogTable {
 public:
  static constexpr std::size_t kEntryBytes = 12;

  DlogTable() = default;

  static DlogTable build(const G& base, std::uint64_t m) {
    require(m <= (std::uint64_t{1} << 32), Errc::invalid_argument, "table size must fit 32-bit exponents");
    DlogTable t;
    t.base_ = base;
    t.m_ = m;
    std::vector<std::pair<std::uint64_t, std::uint32_t>> rows(m);
    G cur = G::identity();
    for (std::uint64_t j = 0; j < m; ++j) {
      rows[j] = {cur.fingerprint(), static_cast<std::uint32_t>(j)};
      cur = cur * base;
    }
    std::sort(rows.begin(), rows.end());
    t.fps_.resize(m);
    t.js_.resize(m);
    for (std::uint64_t j = 0; j < m; ++j) {
      t.fps_[j] = rows[j].first;
      t.js_[j] = rows[j].second;
    }
    return t;
  }

  const G& base() const noexcept { return base_; }
  std::uint64_t m() const noexcept { return m_; }
  bool covers(std::uint64_t bound) const noexcept { return bound < kMaxDlogBound && m_ >= 2 * bound + 1; }

  // Exponents whose fingerprint matches; callers verify.
  template <typename F>
  void for_each_candidate(std::uint64_t fp, F&& f) const {
    auto it = std::lower_bound(fps_.begin(), fps_.end(), fp);
    for (; it != fps_.end() && *it == fp; ++it) f(static_cast<std::uint64_t>(js_[static_cast<std::size_t>(it - fps_.begin())]));
  }

  Bytes serialize() const {
    ByteWriter w;
    w.raw("QDT1");
    w.u32(1);
    w.blob(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(G::kCurveId.data()), G::kCurveId.size()));
    w.blob(base_.encode());
    w.u64(m_);
    for (std::size_t i = 0; i < fps_.size(); ++i) {
      w.u64(fps_[i]);
      w.u32(js_[i]);
    }
    return std::move(w).take();
  }

  // Entries are trusted only as hints: every hit is re-checked by
  // exponentiation, so a corrupted table can miss but never lie.
  static DlogTable parse(std::span<const std::uint8_t> data) {
    ByteReader r(data);
    r.expect_magic("QDT1");
    require(r.u32() == 1, Errc::parse_error, "unsupported table version");
    auto curve = r.blob(64);
    require(std::string_view(reinterpret_cast<const char*>(curve.data()), curve.size()) == G::kCurveId,
            Errc::unsupported_curve, "table was built for another group");
    DlogTable t;
    t.base_ = G::decode(r.blob(G::kEncodedSize));
    t.m_ = r.u64();
    require(t.m_ <= (std::uint64_t{1} << 32) && r.remaining() == t.m_ * kEntryBytes, Errc::parse_error,
            "table entry count does not match its payload");
    t.fps_.resize(t.m_);
    t.js_.resize(t.m_);
    for (std::uint64_t i = 0; i < t.m_; ++i) {
      t.fps_[i] = r.u64();
      t.js_[i] = r.u32();
      require(t.js_[i] < t.m_, Errc::parse_error, "table exponent out of range");
      require(i == 0 || t.fps_[i - 1] <= t.fps_[i], Errc::parse_error, "table is not sorted");
    }
    r.expect_end();
    return t;
  }

  friend bool operator==(const DlogTable& a, const DlogTable& b) {
    return a.m_ == b.m_ && a.base_ == b.base_ && a.fps_ == b.fps_ && a.js_ == b.js_;
  }

 private:
  G base_ = G::identity();
  std::uint64_t m_ = 0;
  std::vector<std::uint64_t> fps_;
  std::vector<std::uint32_t> js_;
};

struct DlogStats {
  std::uint64_t baby_steps = 0;   // computed for this call, 0 when a table covers it
  std::uint64_t giant_steps = 0;
  bool used_table = false;
};

// Returns z in [-bound, bound] with base^z == elem. The search runs over
// z' = z + bound in [0, 2*bound] with step m; giant steps start at the
// block holding z = 0 and alternate outwards, since real outputs sit far
// inside the certified bound.
template <DlogGroup G>
std::int64_t dlog_recover(const G& elem, std::uint64_t bound, const G& base, const DlogTable<G>* table = nullptr,
                          DlogStats* stats = nullptr) {
  DlogStats local;
  DlogStats& st = stats ? *stats : local;
  st = {};
  require(bound < kMaxDlogBound, Errc::bound_overflow, "dlog bound exceeds 2^60");
  if (bound == 0) {
    require(elem == G::identity(), Errc::not_in_range, "element is not the identity and bound is 0");
    return 0;
  }
  require(!table || table->base() == base, Errc::invalid_argument, "table was built for another base");
  const std::uint64_t width = 2 * bound + 1;
  const G shifted = elem * base.pow(bound);  // base^(z + bound)

  std::optional<DlogTable<G>> scratch;
  const DlogTable<G>* steps = nullptr;
  if (table && table->m() > 0) {
    steps = table;
    st.used_table = true;
  } else {
    auto m = static_cast<std::uint64_t>(std::ceil(std::sqrt(static_cast<double>(width))));
    while (m * m < width) ++m;
    scratch = DlogTable<G>::build(base, m);
    st.baby_steps = m;
    steps = &*scratch;
  }
  const std::uint64_t m = steps->m();
  const std::uint64_t blocks = (width + m - 1) / m;

  auto probe = [&](const G& y, std::uint64_t block) -> std::optional<std::int64_t> {
    std::optional<std::int64_t> found;
    steps->for_each_candidate(y.fingerprint(), [&](std::uint64_t j) {
      std::uint64_t zs = block * m + j;
      if (found || zs >= width) return;
      if (base.pow(j) == y) found = static_cast<std::int64_t>(zs) - static_cast<std::int64_t>(bound);
    });
    return found;
  };

  const std::uint64_t center = bound / m;
  const G giant = base.pow(m);       // moves one block down
  const G giant_inv = giant.inverse();  // moves one block up
  G up = shifted * giant_inv.pow(center);
  G down = up;
  std::uint64_t hi = center, lo = center;
  if (auto z = probe(up, center)) {
    st.giant_steps = 1;
    return *z;
  }
  st.giant_steps = 1;
  while (hi + 1 < blocks || lo > 0) {
    if (hi + 1 < blocks) {
      ++hi;
      up = up * giant_inv;
      ++st.giant_steps;
      if (auto z = probe(up, hi)) return *z;
    }
    if (lo > 0) {
      --lo;
      down = down * giant;
      ++st.giant_steps;
      if (auto z = probe(down, lo)) return *z;
    }
  }
  fail(Errc::not_in_range, "discrete log is outside [-" + std::to_string(bound) + ", " + std::to_string(bound) + "]");
}

// Content address of a table: (group id, base encoding, m).
template <DlogGroup G>
std::string table_file_name(const G& base, std::uint64_t m) {
  Sha256 h;
  h.update("fespam-dlog-table");
  h.update(G::kCurveId);
  h.update(base.encode());
  ByteWriter w;
  w.u64(m);
  h.update(w.bytes());
  return "qdt-" + to_hex(h.finish()).substr(0, 24) + ".bin";
}

// Loads the table for (base, m) from dir, building and persisting it when
// absent. DiskBudgetExceeded when m entries would not fit budget_bytes.
template <DlogGroup G>
DlogTable<G> load_or_build_table(const G& base, std::uint64_t m, const std::filesystem::path& dir,
                                 std::uint64_t budget_bytes, bool* built = nullptr) {
  if (built) *built = false;
  require(m <= budget_bytes / DlogTable<G>::kEntryBytes, Errc::disk_budget_exceeded,
          "table of " + std::to_string(m) + " entries needs " + std::to_string(m * DlogTable<G>::kEntryBytes) +
              " bytes, budget is " + std::to_string(budget_bytes));
  auto path = dir / table_file_name(base, m);
  if (std::filesystem::exists(path)) {
    auto t = DlogTable<G>::parse(read_binary(path));
    require(t.base() == base && t.m() == m, Errc::digest_mismatch, "table file does not match its address");
    return t;
  }
  auto t = DlogTable<G>::build(base, m);
  std::filesystem::create_directories(dir);
  write_binary(path, t.serialize());
  if (built) *built = true;
  return t;
}

// A table that alone answers every query with |z| <= bound.
template <DlogGroup G>
DlogTable<G> precompute_table(const G& base, std::uint64_t bound, const std::filesystem::path& dir,
                              std::uint64_t budget_bytes) {
  if (bound == 0) return DlogTable<G>::build(base, 0);
  require(bound < kMaxDlogBound / 2, Errc::disk_budget_exceeded, "bound is far beyond any disk budget");
  return load_or_build_table(base, 2 * bound + 1, dir, budget_bytes);
}

}  // namespace fespam::fe
