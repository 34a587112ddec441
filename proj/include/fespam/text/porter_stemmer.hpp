// Copyright 2026 The fespam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

namespace fespam::text {

// Porter (1980) suffix-stripping stemmer, as published (no later
// "logi"/"bli" amendments). Input must be lowercase a-z.
class PorterStemmer {
 public:
  std::string operator()(std::string_view word) const {
    if (word.size() <= 2) return std::string(word);
    State s{std::string(word)};
    s.step1ab();
    s.step1c();
    s.step2();
    s.step3();
    s.step4();
    s.step5();
    return s.b;
  }

 private:
  struct State {
    std::string b;
    std::size_t j = 0;  // end of the stem under test, exclusive

    bool cons(std::size_t i) const {
      switch (b[i]) {
        case 'a': case 'e': case 'i': case 'o': case 'u': return false;
        case 'y': return i == 0 ? true : !cons(i - 1);
        default: return true;
      }
    }

    // Number of VC sequences in b[0, j).
    int m() const {
      int n = 0;
      std::size_t i = 0;
      while (i < j && cons(i)) ++i;
      while (i < j) {
        while (i < j && !cons(i)) ++i;
        if (i >= j) break;
        while (i < j && cons(i)) ++i;
        ++n;
      }
      return n;
    }

    bool vowel_in_stem() const {
      for (std::size_t i = 0; i < j; ++i)
        if (!cons(i)) return true;
      return false;
    }

    bool double_cons(std::size_t end) const {
      return end >= 2 && b[end - 1] == b[end - 2] && cons(end - 1);
    }

    // *o: stem b[0, end) ends cvc with the final c not w, x or y.
    bool cvc(std::size_t end) const {
      if (end < 3 || !cons(end - 1) || cons(end - 2) || !cons(end - 3)) return false;
      char c = b[end - 1];
      return c != 'w' && c != 'x' && c != 'y';
    }

    bool ends(std::string_view suffix) {
      if (suffix.size() > b.size() || b.compare(b.size() - suffix.size(), suffix.size(), suffix) != 0) return false;
      j = b.size() - suffix.size();
      return true;
    }

    void set_to(std::string_view s) { b.replace(j, std::string::npos, s); }

    void replace_if_m_positive(std::string_view s) {
      if (m() > 0) set_to(s);
    }

    void step1ab() {
      if (b.back() == 's') {
        if (ends("sses")) set_to("ss");
        else if (ends("ies")) set_to("i");
        else if (ends("ss")) {
        } else b.pop_back();
      }
      if (ends("eed")) {
        if (m() > 0) b.pop_back();
        return;
      }
      if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
        b.resize(j);
        if (ends("at")) set_to("ate");
        else if (ends("bl")) set_to("ble");
        else if (ends("iz")) set_to("ize");
        else if (double_cons(b.size())) {
          char c = b.back();
          if (c != 'l' && c != 's' && c != 'z') b.pop_back();
        } else {
          j = b.size();
          if (m() == 1 && cvc(b.size())) b += 'e';
        }
      }
    }

    void step1c() {
      if (ends("y") && vowel_in_stem()) b.back() = 'i';
    }

    void step2() {
      static constexpr std::string_view kRules[][2] = {
          {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"}, {"anci", "ance"}, {"izer", "ize"},
          {"abli", "able"},   {"alli", "al"},     {"entli", "ent"}, {"eli", "e"},     {"ousli", "ous"},
          {"ization", "ize"}, {"ation", "ate"},   {"ator", "ate"},  {"alism", "al"},  {"iveness", "ive"},
          {"fulness", "ful"}, {"ousness", "ous"}, {"aliti", "al"},  {"iviti", "ive"}, {"biliti", "ble"},
      };
      apply_first_match(kRules);
    }

    void step3() {
      static constexpr std::string_view kRules[][2] = {
          {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
          {"ical", "ic"},  {"ful", ""},   {"ness", ""},
      };
      apply_first_match(kRules);
    }

    template <std::size_t N>
    void apply_first_match(const std::string_view (&rules)[N][2]) {
      // Longest matching suffix wins; at most one can match per length here.
      std::size_t best = N;
      for (std::size_t r = 0; r < N; ++r) {
        if (rules[r][0].size() <= b.size() &&
            b.compare(b.size() - rules[r][0].size(), rules[r][0].size(), rules[r][0]) == 0 &&
            (best == N || rules[r][0].size() > rules[best][0].size()))
          best = r;
      }
      if (best == N) return;
      j = b.size() - rules[best][0].size();
      replace_if_m_positive(rules[best][1]);
    }

    void step4() {
      static constexpr std::string_view kSuffixes[] = {
          "al",  "ance", "ence", "er",  "ic",  "able", "ible", "ant", "ement", "ment",
          "ent", "ion",  "ou",   "ism", "ate", "iti",  "ous",  "ive", "ize",
      };
      std::string_view best;
      for (auto s : kSuffixes)
        if (s.size() <= b.size() && b.compare(b.size() - s.size(), s.size(), s) == 0 && s.size() > best.size())
          best = s;
      if (best.empty()) return;
      j = b.size() - best.size();
      if (best == "ion" && !(j > 0 && (b[j - 1] == 's' || b[j - 1] == 't'))) return;
      if (m() > 1) b.resize(j);
    }

    void step5() {
      j = b.size();
      if (b.back() == 'e') {
        j = b.size() - 1;
        int a = m();
        if (a > 1 || (a == 1 && !cvc(j))) b.pop_back();
      }
      j = b.size();
      if (b.back() == 'l' && double_cons(b.size()) && m() > 1) b.pop_back();
    }
  };
};

inline std::string porter_stem(std::string_view word) { return PorterStemmer{}(word); }

}  // namespace fespam::text
