// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "fespam/common/error.hpp"
#include "fespam/common/random.hpp"
#include "fespam/text/feature_vector.hpp"

namespace fespam::text {

struct LabeledVector {
  std::string id;
  FeatureVector x;
  Label label = Label::ham;
};

struct DatasetSplit {
  std::vector<LabeledVector> train;
  std::vector<LabeledVector> test;
  std::uint64_t seed = 0;
  double ratio = 0.7;
};

struct IndexSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Stratified split over arbitrary integer classes. The overall train size
// is round(ratio * N); each class gets floor(ratio * n_c) plus one of the
// leftover slots by largest remainder, so class proportions stay within
// one item. Both sides keep original order.
inline IndexSplit stratified_split(std::span<const int> labels, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) fail(Errc::invalid_argument, "split ratio must be in (0, 1)");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  if (by_class.size() < 2) fail(Errc::degenerate_split, "need at least two classes to stratify");

  const auto total = static_cast<double>(labels.size());
  auto target = static_cast<std::size_t>(std::llround(ratio * total));
  struct Share {
    int label;
    std::size_t take;
    double frac;
  };
  std::vector<Share> shares;
  std::size_t assigned = 0;
  for (const auto& [label, idx] : by_class) {
    double exact = ratio * static_cast<double>(idx.size());
    auto base = static_cast<std::size_t>(std::floor(exact));
    shares.push_back({label, base, exact - static_cast<double>(base)});
    assigned += base;
  }
  std::vector<std::size_t> order(shares.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return shares[a].frac > shares[b].frac; });
  for (std::size_t k = 0; assigned < target && k < order.size(); ++k, ++assigned) ++shares[order[k]].take;

  Rng rng(seed);
  IndexSplit out;
  for (const auto& share : shares) {
    auto idx = by_class[share.label];
    if (share.take == 0 || share.take == idx.size())
      fail(Errc::degenerate_split, "class " + std::to_string(share.label) + " would be empty on one side of the split");
    rng.shuffle(idx);
    out.train.insert(out.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(share.take));
    out.test.insert(out.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(share.take), idx.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

inline DatasetSplit split(std::span<const LabeledVector> dataset, double ratio, std::uint64_t seed) {
  std::vector<int> labels;
  labels.reserve(dataset.size());
  for (const auto& d : dataset) labels.push_back(static_cast<int>(d.label));
  auto idx = stratified_split(labels, ratio, seed);
  DatasetSplit out;
  out.seed = seed;
  out.ratio = ratio;
  for (auto i : idx.train) out.train.push_back(dataset[i]);
  for (auto i : idx.test) out.test.push_back(dataset[i]);
  return out;
}

inline std::string serialize_split(const DatasetSplit& s) {
  std::ostringstream out;
  out << "format_version: 1\nkind: split\nseed: " << s.seed << "\nratio: " << s.ratio << "\n";
  for (const auto& d : s.train) out << "train\t" << d.id << '\t' << to_string(d.label) << '\n';
  for (const auto& d : s.test) out << "test\t" << d.id << '\t' << to_string(d.label) << '\n';
  return out.str();
}

}  // namespace fespam::text
