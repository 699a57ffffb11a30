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

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "dialogkit/metrics.hpp"
#include "dialogkit/ngram_lm.hpp"
#include "dialogkit/text.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace dialogkit;

namespace {

using Row = std::vector<std::optional<bool>>;
using oracles::alpha_oracle;
using oracles::engineered;

LabelMatrix flip(const LabelMatrix& m) {
  LabelMatrix out = m;
  for (auto& item : out)
    for (auto& l : item) if (l) l = !*l;
  return out;
}

}  // namespace

TEST_CASE("majority") {
  CHECK(majority(std::vector<bool>{true, true, true, false, false}));
  CHECK_FALSE(majority(std::vector<bool>{false, false, false, false, false}));
  CHECK_FALSE(majority(std::vector<bool>{true, false}));
  CHECK_THROWS(majority(std::vector<bool>{}));
}

TEST_CASE("not sensible implies not specific") {
  const TurnLabels t({true, false, false}, {true, true, true});
  CHECK(t.specific() == std::vector<bool>{true, false, false});
  CHECK_THROWS(TurnLabels({true}, {true, false}));
}

TEST_CASE("aggregate reproduces the reference SSA figures") {
  const auto generic = aggregate(engineered(10, 7, 0));
  CHECK(generic.sensibleness == 0.7);
  CHECK(generic.specificity == 0.0);
  CHECK(generic.ssa == 0.35);
  CHECK(std::lround(generic.ssa * 100) == 35);

  const auto dialog = aggregate(engineered(100, 62, 39));
  CHECK(dialog.sensibleness == 0.62);
  CHECK(dialog.specificity == 0.39);
  CHECK(dialog.ssa == 0.505);
  CHECK(std::lround(dialog.ssa * 100) == 51);

  const auto perfect = aggregate(engineered(4, 4, 4));
  CHECK(perfect.ssa == 1.0);
  CHECK_THROWS(aggregate(std::vector<TurnLabels>{}));
}

TEST_CASE("ssa identity and coercion hold on random data") {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<TurnLabels> turns;
    const int n = 1 + static_cast<int>(rng.next_u64() % 20);
    const int w = 1 + static_cast<int>(rng.next_u64() % 6);
    for (int i = 0; i < n; ++i) {
      std::vector<bool> s(w), p(w);
      for (int k = 0; k < w; ++k) {
        s[k] = rng.uniform() < 0.6;
        p[k] = rng.uniform() < 0.5;
      }
      turns.emplace_back(s, p);
      for (int k = 0; k < w; ++k) {
        CHECK_FALSE((turns.back().specific()[k] && !turns.back().sensible()[k]));
      }
    }
    const auto r = aggregate(turns);
    CHECK(r.ssa == (r.sensibleness + r.specificity) / 2.0);
  }
}

TEST_CASE("pairwise agreement") {
  CHECK(pairwise_agreement({Row{true, true}, Row{false, false, false}}) == 1.0);
  CHECK(pairwise_agreement({Row{true, false}}) == 0.0);
  CHECK(pairwise_agreement({Row{true, true, false}, Row{true, true, true}}) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS(pairwise_agreement({Row{true}}));
  CHECK_THROWS(pairwise_agreement({Row{true, std::nullopt}}));
}

TEST_CASE("krippendorff alpha fixtures") {
  CHECK(krippendorff_alpha({Row{true, true}, Row{false, false}}) == 1.0);

  const LabelMatrix independent{Row{true, false}, Row{true, false}};
  CHECK(krippendorff_alpha(independent) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(std::abs(krippendorff_alpha(independent) - alpha_oracle(independent)) < 1e-9);
  const LabelMatrix swapped{Row{true, false}, Row{false, true}};
  CHECK(krippendorff_alpha(swapped) == doctest::Approx(-0.5).epsilon(1e-12));

  // Coincidences: o(T,F) = o(F,T) = 2/2 = 1, n = 7, n_T = 4, n_F = 3.
  // D_o = 2/7, D_e = 24/42, alpha = 1/2.
  const LabelMatrix mixed{Row{true, true, false}, Row{false, false}, Row{true, true}};
  CHECK(krippendorff_alpha(mixed) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(krippendorff_alpha(mixed) - alpha_oracle(mixed)) < 1e-9);

  try {
    krippendorff_alpha({Row{true, true}, Row{true, true, true}});
    FAIL("expected degenerate");
  } catch (const DegenerateError& e) {
    CHECK(std::string(e.what()) == "zero expected disagreement");
  }
}

TEST_CASE("alpha matches the oracle, handles missing labels, and ignores relabelling") {
  Rng rng(8);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    LabelMatrix m(1 + rng.next_u64() % 8);
    for (auto& item : m) {
      item.resize(1 + rng.next_u64() % 5);
      for (auto& l : item) {
        const double u = rng.uniform();
        l = u < 0.15 ? std::nullopt : std::optional<bool>(u < 0.6);
      }
    }
    double a = 0.0;
    try {
      a = krippendorff_alpha(m);
    } catch (const std::exception&) {
      continue;
    }
    ++checked;
    CHECK(std::abs(a - alpha_oracle(m)) < 1e-9);
    CHECK(std::abs(a - krippendorff_alpha(flip(m))) < 1e-12);
    bool all_pairable = true;
    for (const auto& item : m) {
      int n = 0;
      for (const auto& l : item) n += l.has_value();
      all_pairable &= n >= 2;
    }
    if (all_pairable) {
      CHECK(pairwise_agreement(m) == doctest::Approx(pairwise_agreement(flip(m))));
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("perplexity reference models") {
  const auto uniform = NGramLm::uniform(Vocab(std::vector<std::string>{"a", "b", "c", "d"}));
  const std::vector<TokenSeq> test{{4, 5, 6}, {7}, {}};
  CHECK(std::abs(perplexity(uniform, test) - 8.0) < 1e-9);

  Vocab v(std::vector<std::string>{"a"});
  const TokenId a = v.id("a");
  const auto det = fixtures::table_lm(
      v, fixtures::probs(v, {{a, 1.0}}), {{{a, a}, fixtures::probs(v, {{Vocab::kEos, 1.0}})}});
  CHECK(perplexity(det, std::vector<TokenSeq>{{a, a}}) == 1.0);

  const auto half = fixtures::table_lm(v, fixtures::probs(v, {{a, 0.5}, {Vocab::kEos, 0.5}}));
  const std::vector<TokenSeq> any{{a, a, a}, {a}, {}};
  CHECK(std::abs(perplexity(half, any) - 2.0) < 1e-9);
  const auto r = evaluate_perplexity(half, any);
  CHECK(r.tokens == 7);

  CHECK_THROWS_AS(perplexity(det, std::vector<TokenSeq>{{a}}), std::domain_error);
  CHECK_THROWS(perplexity(det, std::vector<TokenSeq>{}));
}

TEST_CASE("dropping the worst sequence never raises perplexity") {
  Rng rng(3);
  Vocab v(std::vector<std::string>{"a", "b", "c"});
  std::vector<TokenSeq> train(6);
  for (auto& s : train) {
    s.resize(1 + rng.next_u64() % 5);
    for (auto& t : s) t = static_cast<TokenId>(4 + rng.next_u64() % 3);
  }
  const auto lm = NGramLm::train(v, train, 2, 0.5);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<TokenSeq> test(2 + rng.next_u64() % 5);
    for (auto& s : test) {
      s.resize(rng.next_u64() % 5);
      for (auto& t : s) t = static_cast<TokenId>(4 + rng.next_u64() % 3);
    }
    std::size_t worst = 0;
    double worst_ppl = -1.0;
    for (std::size_t i = 0; i < test.size(); ++i) {
      const double p = perplexity(lm, std::span<const TokenSeq>(&test[i], 1));
      if (p > worst_ppl) {
        worst_ppl = p;
        worst = i;
      }
    }
    std::vector<TokenSeq> rest = test;
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(worst));
    CHECK(perplexity(lm, rest) <= perplexity(lm, test) + 1e-12);
  }
}

TEST_CASE("fit_line") {
  const std::vector<double> x{0, 1, 2, 3, 4}, y{1, 3, 5, 7, 9};
  const auto f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));

  const std::vector<double> x2{3.0, 7.5}, y2{-1.0, 4.0};
  CHECK(fit_line(x2, y2).r_squared == doctest::Approx(1.0).epsilon(1e-12));

  Rng rng(1);
  std::vector<double> xs(100), ys(100);
  for (int i = 0; i < 100; ++i) {
    xs[i] = rng.uniform();
    ys[i] = rng.uniform();
  }
  const auto noise = fit_line(xs, ys);
  CHECK(noise.r_squared < 0.2);
  CHECK(noise.r_squared >= 0.0);

  // Closed-form OLS as an independent check.
  double mx = 0, my = 0;
  for (int i = 0; i < 100; ++i) { mx += xs[i]; my += ys[i]; }
  mx /= 100; my /= 100;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < 100; ++i) { sxy += (xs[i] - mx) * (ys[i] - my); sxx += (xs[i] - mx) * (xs[i] - mx); }
  CHECK(noise.slope == doctest::Approx(sxy / sxx).epsilon(1e-10));
  CHECK(noise.intercept == doctest::Approx(my - sxy / sxx * mx).epsilon(1e-10));

  CHECK_THROWS_AS(fit_line(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}),
                  DegenerateError);
  CHECK_THROWS_AS(fit_line(std::vector<double>{1, 2, 3}, std::vector<double>{2, 2, 2}),
                  DegenerateError);
  CHECK_THROWS(fit_line(std::vector<double>{1}, std::vector<double>{1}));
}

TEST_CASE("label file ingest") {
  std::stringstream in(
      "# conv\tturn\tworker\tsensible\tspecific\n"
      "c1\t1\tw1\t1\t1\n"
      "c1\t1\tw2\t0\t1\n"
      "c1\t1\tw3\t1\t0\n"
      "c1\t3\tw1\t1\t1\n");
  const auto records = read_label_records(in);
  REQUIRE(records.size() == 4);
  const auto grouped = group_labels(records);
  REQUIRE(grouped.size() == 2);
  const auto& t = grouped.at({"c1", 1});
  CHECK(t.specific() == std::vector<bool>{true, false, false});

  std::stringstream dup("c\t1\tw\t1\t1\nc\t1\tw\t0\t0\n");
  const auto dups = read_label_records(dup);
  CHECK_THROWS_AS(group_labels(dups), FormatError);
  std::stringstream bad("c\t1\tw\t2\t1\n");
  CHECK_THROWS_AS(read_label_records(bad), FormatError);
}
