// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <map>

#include "fespam/fe/dlog.hpp"

using namespace fespam;
using namespace fespam::fe;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("fespam_dlog_test_" + name);
  fs::remove_all(p);
  return p;
}

template <typename G>
class DlogTyped : public ::testing::Test {};
using Groups = ::testing::Types<Gt, OracleElem>;
TYPED_TEST_SUITE(DlogTyped, Groups);

}  // namespace

TYPED_TEST(DlogTyped, SmallExamples) {
  using G = TypeParam;
  const G& base = G::generator();
  EXPECT_EQ(dlog_recover(base.pow(std::int64_t{7}), 10, base), 7);
  EXPECT_EQ(dlog_recover(base.pow(std::int64_t{-10}), 10, base), -10);
  EXPECT_EQ(dlog_recover(base.pow(std::int64_t{10}), 10, base), 10);
  try {
    dlog_recover(base.pow(std::int64_t{11}), 10, base);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::not_in_range);
  }
  EXPECT_THROW(dlog_recover(base.pow(std::int64_t{-11}), 10, base), Error);
  EXPECT_EQ(dlog_recover(G::identity(), 0, base), 0);
  EXPECT_THROW(dlog_recover(base, 0, base), Error);
}

TYPED_TEST(DlogTyped, TotalOverSmallRange) {
  using G = TypeParam;
  const G& base = G::generator();
  const std::int64_t bound = std::is_same_v<G, Gt> ? 1500 : 10000;
  G elem = base.pow(-bound);
  for (std::int64_t z = -bound; z <= bound; ++z) {
    ASSERT_EQ(dlog_recover(elem, static_cast<std::uint64_t>(bound), base), z);
    elem = elem * base;
  }
}

TEST(Dlog, TotalOverTenThousandWithTable) {
  const Gt& base = Gt::generator();
  const std::int64_t bound = 10000;
  auto table = DlogTable<Gt>::build(base, 150);
  Gt elem = base.pow(-bound);
  for (std::int64_t z = -bound; z <= bound; ++z) {
    ASSERT_EQ(dlog_recover(elem, static_cast<std::uint64_t>(bound), base, &table), z);
    elem = elem * base;
  }
}

TYPED_TEST(DlogTyped, MatchesLinearScanOracle) {
  using G = TypeParam;
  const G& base = G::generator();
  const std::uint64_t bound = 1'000'000;
  Rng rng(std::is_same_v<G, Gt> ? 1 : 2);
  std::map<std::uint64_t, std::int64_t> want;  // fingerprint -> z from the scan
  std::vector<G> targets;
  for (int i = 0; i < 20; ++i) {
    auto z = rng.between(-static_cast<std::int64_t>(bound), static_cast<std::int64_t>(bound));
    targets.push_back(base.pow(z));
  }
  // One sweep over [-B, B], recording where each target is met.
  std::map<std::uint64_t, const G*> pending;
  for (const auto& t : targets) pending[t.fingerprint()] = &t;
  G cur = base.pow(-static_cast<std::int64_t>(bound));
  for (std::int64_t z = -static_cast<std::int64_t>(bound); z <= static_cast<std::int64_t>(bound); ++z) {
    auto it = pending.find(cur.fingerprint());
    if (it != pending.end() && *it->second == cur) want.emplace(it->first, z);
    cur = cur * base;
  }
  ASSERT_EQ(want.size(), pending.size());
  for (const auto& t : targets) EXPECT_EQ(dlog_recover(t, bound, base), want.at(t.fingerprint()));
}

TYPED_TEST(DlogTyped, TablePersistsAndAnswersIdentically) {
  using G = TypeParam;
  const G& base = G::generator();
  auto dir = scratch_dir(std::string(G::kCurveId));
  bool built = false;
  auto t1 = load_or_build_table(base, 4001, dir, 1 << 20, &built);
  EXPECT_TRUE(built);
  EXPECT_TRUE(t1.covers(2000));
  EXPECT_FALSE(t1.covers(2001));
  auto t2 = load_or_build_table(base, 4001, dir, 1 << 20, &built);
  EXPECT_FALSE(built);
  EXPECT_EQ(t1, t2);
  EXPECT_EQ(t1.serialize(), t2.serialize());
  EXPECT_EQ(t2.serialize(), DlogTable<G>::parse(t2.serialize()).serialize());
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    auto z = rng.between(-2000, 2000);
    auto e = base.pow(z);
    DlogStats st;
    EXPECT_EQ(dlog_recover(e, 2000, base, &t2, &st), z);
    EXPECT_TRUE(st.used_table);
    EXPECT_EQ(st.baby_steps, 0u);
    EXPECT_EQ(st.giant_steps, 1u);
    EXPECT_EQ(dlog_recover(e, 2000, base, &t1), dlog_recover(e, 2000, base));
  }
  // Used as enlarged baby steps for a wider bound.
  for (int i = 0; i < 20; ++i) {
    auto z = rng.between(-500000, 500000);
    EXPECT_EQ(dlog_recover(base.pow(z), 500000, base, &t2), z);
  }
  fs::remove_all(dir);
}

TEST(DlogTable, ContentAddressing) {
  const Gt& g = Gt::generator();
  EXPECT_EQ(table_file_name(g, 100), table_file_name(g, 100));
  EXPECT_NE(table_file_name(g, 100), table_file_name(g, 101));
  EXPECT_NE(table_file_name(g, 100), table_file_name(g * g, 100));
  EXPECT_NE(table_file_name(g, 100), table_file_name(OracleElem::generator(), 100));
}

TEST(DlogTable, DiskBudget) {
  auto dir = scratch_dir("budget");
  try {
    precompute_table(OracleElem::generator(), 1000, dir, 2001 * 12 - 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::disk_budget_exceeded);
  }
  EXPECT_FALSE(fs::exists(dir));
  auto t = precompute_table(OracleElem::generator(), 1000, dir, 2001 * 12);
  EXPECT_EQ(t.m(), 2001u);
  fs::remove_all(dir);
}

TEST(DlogTable, ZeroBound) {
  auto t = precompute_table(Gt::generator(), 0, scratch_dir("zero"), 0);
  EXPECT_EQ(t.m(), 0u);
  EXPECT_EQ(dlog_recover(Gt::identity(), 0, Gt::generator(), &t), 0);
  EXPECT_THROW(dlog_recover(Gt::generator(), 0, Gt::generator(), &t), Error);
}

TEST(DlogTable, CorruptFilesAreStructuredErrors) {
  auto t = DlogTable<OracleElem>::build(OracleElem::generator(), 300);
  auto bytes = t.serialize();
  Rng rng(9);
  int rejected = 0;
  for (int i = 0; i < 500; ++i) {
    auto bad = bytes;
    auto flips = 1 + rng.below(4);
    for (std::uint64_t f = 0; f < flips; ++f) bad[rng.below(bad.size())] ^= static_cast<std::uint8_t>(1 + rng.below(255));
    if (rng.bernoulli(0.2)) bad.resize(rng.below(bad.size()));
    try {
      auto parsed = DlogTable<OracleElem>::parse(bad);
      // A mutation that still parses can only lose answers, never give a wrong one.
      for (std::int64_t z : {-100, 0, 37, 149}) {
        try {
          EXPECT_EQ(dlog_recover(OracleElem::generator().pow(z), 149, parsed.base(), &parsed), z);
        } catch (const Error& e) {
          EXPECT_TRUE(e.code() == Errc::not_in_range || e.code() == Errc::invalid_argument);
        }
      }
    } catch (const Error&) {
      ++rejected;
    }
  }
  EXPECT_GT(rejected, 0);
  auto other = DlogTable<Gt>::build(Gt::generator(), 3).serialize();
  EXPECT_THROW(DlogTable<OracleElem>::parse(other), Error);
}
