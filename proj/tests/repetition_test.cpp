// Copyright 2026 The Dialogkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <string>
#include <vector>

#include "doctest.h"
#include "dialogkit/repetition.hpp"
#include "dialogkit/rng.hpp"

using namespace dialogkit;

namespace {

using Words = std::vector<std::string>;

std::size_t run(const Words& a, const Words& b, RepetitionMode m) {
  return longest_common_run(a, b, m);
}

// Brute-force longest common substring: every start pair, extend greedily.
std::size_t naive_substring(const Words& a, const Words& b) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      std::size_t k = 0;
      while (i + k < a.size() && j + k < b.size() && a[i + k] == b[j + k]) ++k;
      best = std::max(best, k);
    }
  }
  return best;
}

// Brute-force LCS over every subset of the shorter sequence.
std::size_t naive_subsequence(const Words& a, const Words& b) {
  const Words& s = a.size() <= b.size() ? a : b;
  const Words& t = a.size() <= b.size() ? b : a;
  std::size_t best = 0;
  for (unsigned mask = 0; mask < (1u << s.size()); ++mask) {
    std::size_t j = 0, len = 0;
    bool ok = true;
    for (std::size_t i = 0; i < s.size() && ok; ++i) {
      if (!(mask >> i & 1u)) continue;
      while (j < t.size() && t[j] != s[i]) ++j;
      if (j == t.size()) ok = false;
      else { ++j; ++len; }
    }
    if (ok) best = std::max(best, len);
  }
  return best;
}

Words random_words(Rng& rng, std::size_t max_len) {
  Words w(rng.next_u64() % (max_len + 1));
  for (auto& s : w) s = std::string(1, static_cast<char>('a' + rng.next_u64() % 3));
  return w;
}

}  // namespace

TEST_CASE("longest_common_run examples") {
  const Words xyz{"x", "y", "z"};
  CHECK(run(xyz, xyz, RepetitionMode::kContiguous) == 3);
  CHECK(run(xyz, xyz, RepetitionMode::kSubsequence) == 3);
  CHECK(run({"x", "y"}, {"u", "v"}, RepetitionMode::kContiguous) == 0);
  CHECK(run({"x", "y"}, {"u", "v"}, RepetitionMode::kSubsequence) == 0);
  const Words a{"i", "would", "love", "to", "go", "to", "japan", "too"};
  const Words b{"i", "would", "love", "to", "go", "to", "paris", "too"};
  CHECK(run(a, b, RepetitionMode::kContiguous) == 6);
  CHECK(run(a, b, RepetitionMode::kSubsequence) == 7);
}

TEST_CASE("longest_common_run agrees with brute force and its invariants") {
  Rng rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    const Words a = random_words(rng, 9), b = random_words(rng, 9);
    const auto c = run(a, b, RepetitionMode::kContiguous);
    const auto s = run(a, b, RepetitionMode::kSubsequence);
    CHECK(c == naive_substring(a, b));
    CHECK(s == naive_subsequence(a, b));
    CHECK(c == run(b, a, RepetitionMode::kContiguous));
    CHECK(s == run(b, a, RepetitionMode::kSubsequence));
    CHECK(c <= s);
    CHECK(s <= std::min(a.size(), b.size()));
    Words a2 = a, b2 = b;
    const Words tail = random_words(rng, 3);
    a2.insert(a2.end(), tail.begin(), tail.end());
    b2.push_back(tail.empty() ? "c" : tail.back());
    CHECK(run(a2, b2, RepetitionMode::kContiguous) >= c);
    CHECK(run(a2, b2, RepetitionMode::kSubsequence) >= s);
  }
}

TEST_CASE("normalisation lowercases and strips edge punctuation") {
  CHECK(repetition_tokens("I'd love to go to Japan, too!") ==
        Words{"i'd", "love", "to", "go", "to", "japan", "too"});
  CHECK(repetition_tokens("  ... Hi!  ") == Words{"hi"});
  CHECK(repetition_tokens("Hi!", false) == Words{"Hi!"});
}

TEST_CASE("cross-turn repetition") {
  const std::vector<std::string> none;
  CHECK_FALSE(is_cross_turn_repetition(none, "anything at all here"));

  const std::vector<std::string> history{"Hi!", "How are you doing today?",
                                         "I'd love to go to Japan too."};
  const auto same = is_cross_turn_repetition(history, "How are you doing today?");
  REQUIRE(same);
  CHECK(same->turn == 1);

  const auto japan =
      is_cross_turn_repetition(history, "I'd love to go to Japan, too!");
  REQUIRE(japan);
  CHECK(japan->turn == 2);
  CHECK(japan->run == 7);
  CHECK(japan->required == 4);

  // "Hi!" repeated is one token, under the three-token floor.
  CHECK_FALSE(is_cross_turn_repetition(history, "Hi!"));

  RepetitionConfig bad;
  bad.min_fraction = 0.0;
  CHECK_THROWS(is_cross_turn_repetition(history, "x", bad));
}

TEST_CASE("lowest matching turn is reported") {
  const std::vector<std::string> history{"a b c d", "x y", "a b c d"};
  const auto m = is_cross_turn_repetition(history, "a b c d");
  REQUIRE(m);
  CHECK(m->turn == 0);
}

TEST_CASE("in-turn repetition") {
  CHECK(is_in_turn_repetition("a b c a b c"));
  CHECK_FALSE(is_in_turn_repetition("one two three four five"));
  CHECK_FALSE(is_in_turn_repetition("I like pizza, but I don't like it"));
  CHECK(is_in_turn_repetition("a a", 1));
  CHECK_THROWS(is_in_turn_repetition("a", 0));
}

TEST_CASE("filter_candidates") {
  const std::vector<std::string> history{"i love cats so much", "do you"};
  const std::vector<std::string> clean{"tell me more", "what about dogs"};
  const auto kept = filter_candidates(history, clean);
  CHECK(kept.kept == std::vector<std::size_t>{0, 1});
  CHECK(kept.removed.empty());
  CHECK_FALSE(kept.forced);

  const std::vector<std::string> mixed{"I love cats so much!", "dogs are nice",
                                       "i love cats so much too"};
  const auto f = filter_candidates(history, mixed);
  CHECK(f.kept == std::vector<std::size_t>{1});
  REQUIRE(f.removed.size() == 2);
  CHECK(f.removed[0].candidate == 0);
  CHECK(f.removed[0].turn == 0);
  CHECK(f.removed[1].candidate == 2);

  const std::vector<std::string> all{"i love cats so much", "I love cats so much."};
  const auto forced = filter_candidates(history, all);
  CHECK(forced.forced);
  CHECK(forced.kept == std::vector<std::size_t>{0});
  CHECK(forced.removed.size() == 2);
}

TEST_CASE("filtering is idempotent") {
  Rng rng(77);
  const char* words[] = {"a", "b", "c", "d"};
  auto sentence = [&] {
    std::string s;
    const int len = 1 + static_cast<int>(rng.next_u64() % 6);
    for (int i = 0; i < len; ++i) {
      if (i) s += ' ';
      s += words[rng.next_u64() % 4];
    }
    return s;
  };
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> history(rng.next_u64() % 4), cands(1 + rng.next_u64() % 6);
    for (auto& h : history) h = sentence();
    for (auto& c : cands) c = sentence();
    const auto first = filter_candidates(history, cands);
    std::vector<std::string> survivors;
    for (auto i : first.kept) survivors.push_back(cands[i]);
    const auto second = filter_candidates(history, survivors);
    std::vector<std::string> again;
    for (auto i : second.kept) again.push_back(survivors[i]);
    CHECK(again == survivors);
  }
}
