// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "fespam/common/io.hpp"
#include "fespam/text/corpus.hpp"
#include "fespam/text/porter_stemmer.hpp"
#include "fespam/text/preprocess.hpp"
#include "fespam/text/split.hpp"
#include "fespam/text/synthetic.hpp"
#include "fespam/text/vocabulary.hpp"

using namespace fespam;
using namespace fespam::text;

namespace {

TokenizedEmail doc(std::vector<std::string> toks, Label l, std::string id = "d") {
  return {std::move(id), std::move(toks), l};
}

std::string filler(std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += " filler";
  return s;
}

// Entropy-by-enumeration oracle: tallies the joint (presence, label)
// table document by document, independent of Vocabulary's df bookkeeping.
double brute_force_ig(const std::vector<std::pair<bool, int>>& docs) {
  std::map<std::pair<bool, int>, double> joint;
  std::map<int, double> py;
  std::map<bool, double> px;
  for (auto& d : docs) {
    joint[d] += 1;
    py[d.second] += 1;
    px[d.first] += 1;
  }
  double n = static_cast<double>(docs.size());
  double mi = 0;
  for (auto& [k, c] : joint) mi += (c / n) * std::log2((c / n) / ((px[k.first] / n) * (py[k.second] / n)));
  return mi;
}

}  // namespace

TEST(Preprocess, AppliesEachRuleIndependently) {
  RawEmail raw{"e1", "", "Hello WORLD!! 123abc verylongwordthatkeepsgoing" + filler(9), Label::ham};
  auto r = preprocess(raw);
  ASSERT_TRUE(r.accepted());
  const auto& t = r.email->tokens;
  ASSERT_EQ(t.size(), 11u);
  EXPECT_EQ(t[0], "hello");
  EXPECT_EQ(t[1], "world");
  for (const auto& tok : t) {
    EXPECT_NE(tok, "abc");
    EXPECT_LE(tok.size(), 15u);
    EXPECT_EQ(tok.find_first_not_of("abcdefghijklmnopqrstuvwxyz"), std::string::npos);
  }
}

TEST(Preprocess, RejectsShortAndLongEmails) {
  auto short_r = preprocess({"s", "", "one two three four five", Label::spam});
  ASSERT_FALSE(short_r.accepted());
  EXPECT_EQ(short_r.reason, RejectReason::too_short);

  auto long_r = preprocess({"l", "", filler(101), Label::spam});
  ASSERT_FALSE(long_r.accepted());
  EXPECT_EQ(long_r.reason, RejectReason::too_long);

  EXPECT_TRUE(preprocess({"ten", "", filler(10), Label::ham}).accepted());
  EXPECT_TRUE(preprocess({"hundred", "", filler(100), Label::ham}).accepted());
}

TEST(Preprocess, SubjectTokensComeFirst) {
  auto r = preprocess({"s", "Cheap Offer", filler(8), Label::spam});
  ASSERT_TRUE(r.accepted());
  EXPECT_EQ(r.email->tokens[0], "cheap");
  EXPECT_EQ(r.email->tokens[1], "offer");
}

TEST(Preprocess, InvalidUtf8IsDecodeError) {
  RawEmail raw{"bad", "", std::string("abc \xff\xfe def") + filler(10), Label::ham};
  try {
    preprocess(raw);
    FAIL() << "expected DecodeError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::decode_error);
  }
}

TEST(Porter, MatchesReferenceWordList) {
  std::ifstream in(std::string(FESPAM_TEST_DATA) + "/porter_reference.txt");
  ASSERT_TRUE(in);
  std::string word, stem;
  int checked = 0;
  while (in >> word >> stem) {
    EXPECT_EQ(porter_stem(word), stem) << word;
    ++checked;
  }
  EXPECT_GE(checked, 100);
}

TEST(Porter, RunningRunsRan) {
  auto toks = tokenize("running runs ran");
  EXPECT_EQ(toks, (std::vector<std::string>{"run", "run", "ran"}));
}

TEST(Preprocess, IdempotentOnNormalizedStreams) {
  Rng rng(3);
  auto lex = make_lexicon(50, 5);
  std::vector<std::string> english{"meet", "offer", "money", "price", "click", "report", "call", "agre", "cat"};
  for (int trial = 0; trial < 50; ++trial) {
    TokenizedEmail e{"t" + std::to_string(trial), {}, trial % 2 ? Label::spam : Label::ham};
    auto len = rng.between(10, 100);
    for (int i = 0; i < len; ++i) {
      std::string w = rng.bernoulli(0.5) ? lex[rng.below(lex.size())] : english[rng.below(english.size())];
      // Iterate to the stemmer's fixed point so the stream is normalized.
      for (std::string s = porter_stem(w); s != w; s = porter_stem(w)) w = s;
      e.tokens.push_back(w);
    }
    auto again = preprocess(render(e));
    ASSERT_TRUE(again.accepted());
    EXPECT_EQ(*again.email, e);
  }
}

TEST(Vocabulary, CountsDocumentPresence) {
  std::vector<TokenizedEmail> corpus{doc({"a", "b", "b"}, Label::spam), doc({"b", "c"}, Label::ham)};
  auto v = build_vocabulary(corpus);
  EXPECT_EQ(v.terms(), (std::vector<std::string>{"a", "b", "c"}));
  auto b = v.index_of("b");
  EXPECT_EQ(v.doc_freq(b)[0] + v.doc_freq(b)[1], 2u);
  EXPECT_EQ(v.doc_freq(v.index_of("a"))[1], 1u);
  EXPECT_EQ(v.total_docs()[0], 1u);
  EXPECT_EQ(v.total_docs()[1], 1u);
}

TEST(Vocabulary, EmptyCorpus) {
  try {
    build_vocabulary({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_corpus);
  }
}

TEST(InformationGain, PerfectSeparatorAndUbiquitousTerm) {
  std::vector<TokenizedEmail> corpus{doc({"win", "all"}, Label::spam), doc({"win", "all"}, Label::spam),
                                     doc({"all"}, Label::ham), doc({"all"}, Label::ham)};
  auto v = build_vocabulary(corpus);
  EXPECT_DOUBLE_EQ(information_gain(v, "win"), 1.0);
  EXPECT_DOUBLE_EQ(information_gain(v, "all"), 0.0);
}

TEST(InformationGain, HalfPresentBalancedIsZero) {
  std::vector<TokenizedEmail> corpus{doc({"t"}, Label::spam), doc({"x"}, Label::spam), doc({"t"}, Label::ham),
                                     doc({"x"}, Label::ham)};
  auto v = build_vocabulary(corpus);
  double oracle = brute_force_ig({{true, 1}, {false, 1}, {true, 0}, {false, 0}});
  EXPECT_NEAR(oracle, 0.0, 1e-15);
  EXPECT_NEAR(information_gain(v, "t"), oracle, 1e-12);
}

TEST(InformationGain, UnknownTerm) {
  auto v = build_vocabulary(std::vector<TokenizedEmail>{doc({"a"}, Label::spam)});
  try {
    information_gain(v, "zzz");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::unknown_term);
  }
}

TEST(InformationGain, MatchesOracleSymmetricAndBounded) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TokenizedEmail> corpus, swapped;
    std::vector<std::pair<bool, int>> oracle_docs;
    auto n = rng.between(2, 40);
    for (int d = 0; d < n; ++d) {
      int y = static_cast<int>(rng.below(2));
      bool present = rng.bernoulli(0.4);
      std::vector<std::string> toks{"filler"};
      if (present) toks.push_back("t");
      corpus.push_back(doc(toks, static_cast<Label>(y)));
      swapped.push_back(doc(toks, static_cast<Label>(1 - y)));
      oracle_docs.push_back({present, y});
    }
    auto v = build_vocabulary(corpus);
    if (!v.find("t")) continue;
    double ig = information_gain(v, "t");
    EXPECT_NEAR(ig, brute_force_ig(oracle_docs), 1e-12);
    EXPECT_NEAR(ig, information_gain(build_vocabulary(swapped), "t"), 1e-12);
    double py = static_cast<double>(v.total_docs()[1]) / static_cast<double>(n);
    double hy = (py > 0 && py < 1) ? -(py * std::log2(py) + (1 - py) * std::log2(1 - py)) : 0.0;
    EXPECT_GE(ig, 0.0);
    EXPECT_LE(ig, hy + 1e-12);
  }
}

TEST(SelectFeatures, IdentityWhenKeepingEverything) {
  std::vector<TokenizedEmail> corpus{doc({"b", "a"}, Label::spam), doc({"c"}, Label::ham)};
  auto v = build_vocabulary(corpus);
  EXPECT_EQ(select_features(v, v.size()), v);
}

TEST(SelectFeatures, TiesBrokenLexicographically) {
  // "apple" and "cherry" are perfect separators (IG 1.0), "banana" is weak.
  std::vector<TokenizedEmail> corpus{doc({"apple", "cherry", "banana"}, Label::spam),
                                     doc({"apple", "cherry"}, Label::spam), doc({"banana"}, Label::ham),
                                     doc({"zz"}, Label::ham)};
  auto v = build_vocabulary(corpus);
  ASSERT_DOUBLE_EQ(information_gain(v, "apple"), information_gain(v, "cherry"));
  ASSERT_GT(information_gain(v, "apple"), information_gain(v, "banana"));
  auto s = select_features(v, 2);
  EXPECT_EQ(s.terms(), (std::vector<std::string>{"apple", "cherry"}));

  // Equal-IG candidates beyond the cut are dropped from the end of the
  // lexicographic order.
  auto one = select_features(v, 1);
  EXPECT_EQ(one.terms(), (std::vector<std::string>{"apple"}));
}

TEST(SelectFeatures, NTooLarge) {
  auto v = build_vocabulary(std::vector<TokenizedEmail>{doc({"a"}, Label::spam)});
  try {
    select_features(v, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::n_too_large);
  }
}

TEST(SelectFeatures, KeepsTheMostInformativeSubset) {
  auto raw = generate_spam_corpus({.emails = 300, .background_terms = 80, .indicative_terms = 20, .seed = 4});
  PrepareReport rep;
  auto corpus = preprocess_all(raw, rep);
  auto v = build_vocabulary(corpus);
  for (std::size_t n : {1u, 5u, 37u, 100u}) {
    auto s = select_features(v, n);
    ASSERT_EQ(s.size(), n);
    double min_kept = 1e9;
    std::set<std::string> kept(s.terms().begin(), s.terms().end());
    for (const auto& t : s.terms()) {
      ASSERT_TRUE(v.find(t).has_value());
      min_kept = std::min(min_kept, information_gain(v, t));
    }
    for (const auto& t : v.terms())
      if (!kept.count(t)) {
        double ig = information_gain(v, t);
        EXPECT_LE(ig, min_kept);
        if (ig == min_kept) {
          auto last_tied = *std::find_if(s.terms().rbegin(), s.terms().rend(),
                                         [&](const std::string& k) { return information_gain(v, k) == min_kept; });
          EXPECT_GT(t, last_tied);
        }
      }
  }
}

TEST(Vectorize, CountsAndOutOfVocabulary) {
  std::vector<TokenizedEmail> corpus{doc({"a", "b", "c"}, Label::spam), doc({"a"}, Label::ham)};
  auto v = build_vocabulary(corpus);
  EXPECT_EQ(vectorize(doc({"b", "b", "c"}, Label::ham), v).counts, (std::vector<std::uint32_t>{0, 2, 1}));
  EXPECT_EQ(vectorize(doc({"zzz", "qqq"}, Label::ham), v).counts, (std::vector<std::uint32_t>{0, 0, 0}));
  EXPECT_EQ(vectorize(doc({"b", "b", "c"}, Label::ham), v, TermWeighting::binary).counts,
            (std::vector<std::uint32_t>{0, 1, 1}));
}

TEST(Vectorize, NonNegativeBoundedByLength) {
  auto raw = generate_spam_corpus({.emails = 200, .seed = 9});
  PrepareReport rep;
  auto corpus = preprocess_all(raw, rep);
  auto v = select_features(build_vocabulary(corpus), 50);
  for (const auto& e : corpus) {
    auto fv = vectorize(e, v);
    std::uint64_t sum = 0;
    for (auto c : fv.counts) {
      EXPECT_LE(c, 100u);
      sum += c;
    }
    EXPECT_LE(sum, e.tokens.size());
  }
}

TEST(Split, SevenThree) {
  std::vector<LabeledVector> data;
  for (int i = 0; i < 10; ++i) data.push_back({"d" + std::to_string(i), {}, i % 2 ? Label::spam : Label::ham});
  auto s = split(data, 0.7, 42);
  EXPECT_EQ(s.train.size(), 7u);
  EXPECT_EQ(s.test.size(), 3u);
  auto again = split(data, 0.7, 42);
  EXPECT_EQ(serialize_split(s), serialize_split(again));
  std::set<std::string> ids;
  for (auto* side : {&s.train, &s.test})
    for (auto& d : *side) EXPECT_TRUE(ids.insert(d.id).second);
  EXPECT_EQ(ids.size(), 10u);
}

TEST(Split, PreservesTrecClassProportions) {
  std::vector<int> labels(11361, 1);
  labels.insert(labels.end(), 7817, 0);
  auto s = stratified_split(labels, 0.7, 1);
  std::size_t spam_train = 0;
  for (auto i : s.train) spam_train += labels[i] == 1;
  std::size_t ham_train = s.train.size() - spam_train;
  EXPECT_LE(std::abs(static_cast<double>(spam_train) - 0.7 * 11361), 1.0);
  EXPECT_LE(std::abs(static_cast<double>(ham_train) - 0.7 * 7817), 1.0);
  EXPECT_EQ(s.train.size() + s.test.size(), labels.size());
}

TEST(Split, DegenerateAndInvalid) {
  std::vector<int> one_spam{0, 0, 0, 0, 1};
  EXPECT_THROW(stratified_split(one_spam, 0.7, 1), Error);
  std::vector<int> balanced{0, 1, 0, 1};
  EXPECT_THROW(stratified_split(balanced, 1.0, 1), Error);
  EXPECT_THROW(stratified_split(balanced, 0.0, 1), Error);
  try {
    stratified_split(one_spam, 0.7, 1);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate_split);
  }
}

TEST(CorpusFiles, RoundTripAndDeterminism) {
  auto raw = generate_spam_corpus({.emails = 50, .seed = 2});
  PrepareReport rep;
  auto corpus = preprocess_all(raw, rep);
  EXPECT_EQ(rep.kept + rep.rejected_too_short + rep.rejected_too_long + rep.rejected_decode, rep.total);
  auto text = serialize_corpus(corpus);
  EXPECT_EQ(parse_corpus(text), corpus);
  auto vocab = select_features(build_vocabulary(corpus), 20);
  auto vtext = serialize_vocabulary(vocab);
  EXPECT_EQ(parse_vocabulary(vtext), vocab);
  EXPECT_EQ(serialize_vocabulary(parse_vocabulary(vtext)), vtext);
  EXPECT_THROW(parse_corpus("format_version: 2\n"), Error);
  EXPECT_THROW(parse_vocabulary(vtext.substr(0, vtext.size() / 2) + "\tbroken"), Error);
}

TEST(CorpusFiles, LoadsDirectoryLayoutAndTrecIndex) {
  namespace fs = std::filesystem;
  auto root = fs::temp_directory_path() / "fespam_text_test_corpus";
  fs::remove_all(root);
  write_text(root / "spam" / "1.txt", "Subject: cheap pills\nbuy now <b>cheap</b> pills offer");
  write_text(root / "ham" / "1.txt", "Subject: meeting\nsee you at the meeting tomorrow");
  auto emails = load_dataset(root);
  ASSERT_EQ(emails.size(), 2u);
  EXPECT_EQ(emails[0].label, Label::ham);
  EXPECT_EQ(emails[0].subject, " meeting");
  EXPECT_EQ(emails[1].label, Label::spam);

  auto trec = fs::temp_directory_path() / "fespam_text_test_trec";
  fs::remove_all(trec);
  write_text(trec / "data" / "inmail.1",
             "From: a@b.c\nSubject: hello there\nContent-Type: text/html\n\n<html><p>Win &amp; money</p></html>\n");
  write_text(trec / "full" / "index", "SPAM ../data/inmail.1\n");
  auto t = load_dataset(trec);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].label, Label::spam);
  EXPECT_EQ(t[0].subject, " hello there");
  EXPECT_EQ(t[0].body.find('<'), std::string::npos);
  EXPECT_NE(t[0].body.find("Win & money"), std::string::npos);

  auto empty = fs::temp_directory_path() / "fespam_text_test_empty";
  fs::remove_all(empty);
  fs::create_directories(empty);
  try {
    load_dataset(empty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::missing_dataset);
  }
  fs::remove_all(root);
  fs::remove_all(trec);
  fs::remove_all(empty);
}

TEST(Synthetic, LexiconIsStemStable) {
  for (const auto& w : make_lexicon(500, 1)) EXPECT_EQ(porter_stem(w), w);
}
