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

#include <sstream>

#include "doctest.h"
#include "dialogkit/ngram_lm.hpp"
#include "dialogkit/softmax.hpp"
#include "dialogkit/table_lm.hpp"
#include "dialogkit/text.hpp"
#include "fixtures.hpp"

using namespace dialogkit;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(v.size());
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_CASE("vocab reserves four distinct ids") {
  Vocab v(std::vector<std::string>{"a", "b", "<unk>"});
  CHECK(v.size() == 6);
  CHECK(v.token(Vocab::kBos) == "<s>");
  CHECK(v.token(Vocab::kEos) == "</s>");
  CHECK(v.token(Vocab::kUnk) == "<unk>");
  CHECK(v.token(Vocab::kSep) == "<sep>");
  CHECK(v.id("a") == 4);
  CHECK(v.id("zzz") == Vocab::kUnk);
  CHECK_THROWS_AS(Vocab(std::vector<std::string>{"a", "a"}),
                  std::invalid_argument);
}

TEST_CASE("softmax at T=1") {
  const Eigen::VectorXd half = softmax(vec({0.0, 0.0}), 1.0);
  CHECK(half(0) == 0.5);
  CHECK(half(1) == 0.5);

  // Reference values from a 40-digit evaluation.
  const Eigen::VectorXd p = softmax(vec({1.0, 2.0, 3.0}), 1.0);
  CHECK(p(0) == doctest::Approx(0.0900305731703805).epsilon(1e-12));
  CHECK(p(1) == doctest::Approx(0.2447284710547977).epsilon(1e-12));
  CHECK(p(2) == doctest::Approx(0.6652409557748219).epsilon(1e-12));
  CHECK(std::abs(p.sum() - 1.0) < 1e-12);
}

TEST_CASE("low temperature concentrates on the argmax") {
  const Eigen::VectorXd p = softmax(vec({1.0, 2.0}), 0.01);
  CHECK(p(1) > 1.0 - 1e-10);
}

TEST_CASE("softmax is stable for huge logits") {
  const Eigen::VectorXd p = softmax(vec({1000.0, 1000.0, -1000.0}), 1.0);
  CHECK(p.allFinite());
  CHECK(p(0) == doctest::Approx(0.5));
}

TEST_CASE("next_distribution rejects non-positive temperatures") {
  const Vocab v;
  const auto lm = fixtures::table_lm(v, Eigen::VectorXd::Constant(4, 0.25));
  for (double t : {0.0, -1.0}) {
    try {
      next_distribution(lm, {}, t);
      FAIL("expected throw");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()) == "invalid temperature");
    }
  }
}

TEST_CASE("entropy is non-decreasing in T and argmax is T-invariant") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd z(6);
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = 6.0 * rng.uniform() - 3.0;
    double prev = -1.0;
    for (double t : {0.5, 0.88, 1.0, 2.0}) {
      const Eigen::VectorXd p = softmax(z, t);
      CHECK(std::abs(p.sum() - 1.0) <= 1e-9);
      CHECK(argmax(p) == argmax(z));
      const double h = entropy(p);
      CHECK(h >= prev - 1e-12);
      prev = h;
    }
  }
}

TEST_CASE("distribution invariants are enforced") {
  CHECK_THROWS(Distribution(vec({0.5, 0.6})));
  CHECK_THROWS(Distribution(vec({-0.1, 1.1})));
  CHECK_NOTHROW(Distribution(vec({0.25, 0.75})));
  CHECK_THROWS(Logits(vec({0.0, std::numeric_limits<double>::infinity()})));
}

TEST_CASE("train_ngram add-delta unigram") {
  Vocab v(std::vector<std::string>{"a", "b"});
  const std::vector<TokenSeq> corpus{{v.id("a"), v.id("b")}};
  const auto lm = NGramLm::train(v, corpus, 1, 1.0);
  const auto d = next_distribution(lm, {});
  // events a, b, EOS (n = 3); |V| = 6 -> (1 + 1) / (3 + 6)
  CHECK(d[v.id("a")] == doctest::Approx(2.0 / 9.0).epsilon(1e-12));
  CHECK(d[Vocab::kEos] == doctest::Approx(2.0 / 9.0).epsilon(1e-12));
  CHECK(d[Vocab::kBos] == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("train_ngram approaches MLE as delta -> 0") {
  Vocab v(std::vector<std::string>{"a"});
  const std::vector<TokenSeq> corpus{{v.id("a")}, {v.id("a")}};
  const auto lm = NGramLm::train(v, corpus, 2, 1e-12, {0.0, 1.0});
  CHECK(next_distribution(lm, {})[v.id("a")] > 1.0 - 1e-9);
}

TEST_CASE("train_ngram errors") {
  Vocab v(std::vector<std::string>{"a"});
  const std::vector<TokenSeq> empty;
  const std::vector<TokenSeq> one{{v.id("a")}};
  try {
    NGramLm::train(v, empty, 2, 1.0);
    FAIL("expected throw");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()) == "empty corpus");
  }
  for (double d : {0.0, -0.5}) {
    try {
      NGramLm::train(v, one, 2, d);
      FAIL("expected throw");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()) == "invalid smoothing");
    }
  }
  CHECK_THROWS(NGramLm::train(v, one, 0, 1.0));
  CHECK_THROWS(NGramLm::train(v, one, 2, 1.0, {0.3, 0.3}));
}

TEST_CASE("n-gram conditionals normalise and stay positive for any context") {
  Rng rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::string> words;
    const int n_words = 2 + static_cast<int>(rng.next_u64() % 6);
    for (int i = 0; i < n_words; ++i) words.push_back("w" + std::to_string(i));
    Vocab v(words);
    std::vector<TokenSeq> corpus(1 + rng.next_u64() % 5);
    for (auto& seq : corpus) {
      const int len = static_cast<int>(rng.next_u64() % 7);
      for (int i = 0; i < len; ++i) {
        seq.push_back(static_cast<TokenId>(rng.next_u64() % v.size()));
      }
    }
    const int order = 1 + static_cast<int>(rng.next_u64() % 4);
    const auto lm = NGramLm::train(v, corpus, order, 0.01 + rng.uniform());
    for (int c = 0; c < 10; ++c) {
      TokenSeq ctx(rng.next_u64() % 6);
      for (auto& t : ctx) t = static_cast<TokenId>(rng.next_u64() % v.size());
      const auto d = next_distribution(lm, ctx);
      CHECK(std::abs(d.probs().sum() - 1.0) <= 1e-9);
      CHECK((d.probs().array() > 0.0).all());
      CHECK(next_distribution(lm, ctx) == d);
    }
  }
}

TEST_CASE("n-gram save/load is bit-exact") {
  Vocab v(std::vector<std::string>{"hello", "tab\there", "back\\slash"});
  const std::vector<TokenSeq> corpus{{4, 5, 6}, {6, 6, 4}, {5}};
  const auto lm = NGramLm::train(v, corpus, 3, 0.137, {0.2, 0.3, 0.5});
  std::stringstream ss;
  lm.save(ss);
  const std::string first = ss.str();
  const auto back = NGramLm::load(ss);
  CHECK(back == lm);
  std::stringstream again;
  back.save(again);
  CHECK(again.str() == first);
  const TokenSeq ctx{4, 5};
  CHECK(next_distribution(back, ctx) == next_distribution(lm, ctx));
}

TEST_CASE("n-gram load rejects damaged files") {
  std::stringstream bad("not a model\n");
  CHECK_THROWS_AS(NGramLm::load(bad), FormatError);
  Vocab v(std::vector<std::string>{"a"});
  const std::vector<TokenSeq> corpus{{4}};
  std::stringstream ss;
  NGramLm::train(v, corpus, 2, 1.0).save(ss);
  std::string text = ss.str();
  text.resize(text.size() - 4);  // drop the end marker
  std::stringstream truncated(text);
  CHECK_THROWS_AS(NGramLm::load(truncated), FormatError);
}

TEST_CASE("uniform model is exactly uniform") {
  const auto lm = NGramLm::uniform(Vocab(std::vector<std::string>{"a", "b", "c", "d"}));
  const auto d = next_distribution(lm, TokenSeq{4, 5});
  for (Eigen::Index i = 0; i < d.size(); ++i) CHECK(d.probs()(i) == 0.125);
}

TEST_CASE("table lm uses the longest matching suffix") {
  Vocab v(std::vector<std::string>{"x", "y"});
  const TokenId x = v.id("x"), y = v.id("y");
  const auto lm = fixtures::table_lm(
      v, fixtures::probs(v, {{Vocab::kEos, 1.0}}),
      {{{x}, fixtures::probs(v, {{x, 1.0}})},
       {{y, x}, fixtures::probs(v, {{y, 1.0}})},
       {{Vocab::kBos}, fixtures::probs(v, {{x, 0.5}, {y, 0.5}})}});
  CHECK(next_distribution(lm, TokenSeq{})[x] == doctest::Approx(0.5));
  CHECK(next_distribution(lm, TokenSeq{x})[x] == 1.0);
  CHECK(next_distribution(lm, TokenSeq{y, x})[y] == 1.0);
  CHECK(next_distribution(lm, TokenSeq{y})[Vocab::kEos] == 1.0);
}

TEST_CASE("contexts beyond the window are truncated from the left") {
  Vocab v(std::vector<std::string>{"x", "y"});
  const TokenId x = v.id("x"), y = v.id("y");
  // A row pinned to sequence start only fires when the whole context fits.
  dialogkit::TableLm::Entries rows;
  rows.emplace(TokenSeq{Vocab::kBos, y, x},
               logits_from_probs(fixtures::probs(v, {{y, 1.0}})));
  const dialogkit::TableLm lm(
      v, logits_from_probs(fixtures::probs(v, {{x, 1.0}})), rows, 2);
  CHECK(next_distribution(lm, TokenSeq{y, x})[y] == 1.0);
  CHECK(next_distribution(lm, TokenSeq{x, y, x})[y] == 1.0);
  const dialogkit::TableLm wide(
      v, logits_from_probs(fixtures::probs(v, {{x, 1.0}})), rows, 3);
  CHECK(next_distribution(wide, TokenSeq{x, y, x})[x] == 1.0);
}

TEST_CASE("impossible logits give exactly zero probability") {
  const Eigen::VectorXd p = softmax(vec({0.0, kImpossibleLogit, 0.0}), 1.0);
  CHECK(p(1) == 0.0);
  CHECK(p(0) == 0.5);
}
