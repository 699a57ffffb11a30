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

#pragma once

// Shared test fixtures and brute-force oracles. Oracles here go through the
// LanguageModel interface only; they never call into the decoding module.

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dialogkit/lm.hpp"
#include "dialogkit/rng.hpp"
#include "dialogkit/table_lm.hpp"

namespace fixtures {

using dialogkit::TokenId;
using dialogkit::TokenSeq;
using dialogkit::Vocab;

inline Vocab make_vocab(const std::vector<std::string>& words) {
  return Vocab(words);
}

/// Probability vector with the given (id, p) entries and zeros elsewhere.
inline Eigen::VectorXd probs(const Vocab& v,
                             const std::vector<std::pair<TokenId, double>>& e) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(v.size());
  for (auto [id, mass] : e) p(id) = mass;
  return p;
}

inline dialogkit::TableLm table_lm(
    const Vocab& v, const Eigen::VectorXd& default_probs,
    const std::map<TokenSeq, Eigen::VectorXd>& rows = {}) {
  dialogkit::TableLm::Entries entries;
  for (const auto& [k, p] : rows) {
    entries.emplace(k, dialogkit::logits_from_probs(p));
  }
  return dialogkit::TableLm(v, dialogkit::logits_from_probs(default_probs),
                            std::move(entries));
}

/// "Loop-prone" model over `n_words` word tokens w0..w{n-1}: after a word the
/// same word follows with probability `self`, EOS with `eos`, and the rest is
/// spread evenly over the other words. After SEP (start of a response) or at
/// the start of a sequence every word is equally likely.
inline dialogkit::TableLm loop_prone_lm(int n_words, double self = 0.9,
                                        double eos = 0.05) {
  std::vector<std::string> words;
  for (int i = 0; i < n_words; ++i) words.push_back("w" + std::to_string(i));
  Vocab v(words);
  Eigen::VectorXd start = Eigen::VectorXd::Zero(v.size());
  for (int i = 0; i < n_words; ++i) start(Vocab::kNumReserved + i) = 1.0 / n_words;
  std::map<TokenSeq, Eigen::VectorXd> rows;
  for (int i = 0; i < n_words; ++i) {
    const TokenId w = Vocab::kNumReserved + i;
    Eigen::VectorXd p = Eigen::VectorXd::Zero(v.size());
    p(w) = self;
    p(Vocab::kEos) = eos;
    for (int j = 0; j < n_words; ++j) {
      if (j != i) p(Vocab::kNumReserved + j) = (1.0 - self - eos) / (n_words - 1);
    }
    rows[{w}] = p;
  }
  return table_lm(v, start, rows);
}

/// Random tiny model for the beam-search oracle comparison: |V| = 4 or 5,
/// rows keyed by every history suffix of length 1 and 2 over the
/// generatable alphabet, BOS never generated, some entries zeroed.
inline dialogkit::TableLm random_tiny_lm(dialogkit::Rng& rng, int vocab_size) {
  std::vector<std::string> words;
  for (int i = Vocab::kNumReserved; i < vocab_size; ++i) {
    words.push_back("t" + std::to_string(i));
  }
  Vocab v(words);
  const auto random_row = [&]() {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(v.size());
    for (TokenId t = 1; t < v.size(); ++t) {
      const double u = rng.uniform();
      p(t) = u < 0.15 ? 0.0 : -std::log(1.0 - rng.uniform());  // Exp(1)
    }
    if (p.sum() <= 0.0) p(Vocab::kEos) = 1.0;
    return Eigen::VectorXd(p / p.sum());
  };
  std::map<TokenSeq, Eigen::VectorXd> rows;
  std::vector<TokenId> alphabet;
  for (TokenId t = 0; t < v.size(); ++t) {
    if (t != Vocab::kEos) alphabet.push_back(t);
  }
  for (TokenId a : alphabet) {
    rows[{a}] = random_row();
    for (TokenId b : alphabet) {
      if (b == Vocab::kBos) continue;
      if (rng.uniform() < 0.5) rows[{a, b}] = random_row();
    }
  }
  return table_lm(v, random_row(), rows);
}

struct Scored {
  TokenSeq tokens;
  double logprob = 0.0;
  double score() const { return logprob / static_cast<double>(tokens.size()); }
};

inline bool better(const Scored& a, const Scored& b) {
  if (a.score() != b.score()) return a.score() > b.score();
  if (a.logprob != b.logprob) return a.logprob > b.logprob;
  return a.tokens < b.tokens;
}

/// Exhaustive enumeration of every response of length <= max_len. Returns
/// the best EOS-terminated response by length-normalised score, or the best
/// unterminated response of exactly max_len when none can finish.
inline Scored exhaustive_best(const dialogkit::LanguageModel& model,
                              const TokenSeq& context, int max_len) {
  std::optional<Scored> best_finished, best_live;
  TokenSeq prefix;
  std::function<void(double)> walk = [&](double logprob) {
    TokenSeq seq = context;
    seq.insert(seq.end(), prefix.begin(), prefix.end());
    const auto d = dialogkit::next_distribution(model, seq);
    for (TokenId t = 0; t < static_cast<TokenId>(d.size()); ++t) {
      if (d[t] <= 0.0) continue;
      prefix.push_back(t);
      const double lp = logprob + std::log(d[t]);
      if (t == Vocab::kEos) {
        Scored s{prefix, lp};
        if (!best_finished || better(s, *best_finished)) best_finished = s;
      } else if (static_cast<int>(prefix.size()) == max_len) {
        Scored s{prefix, lp};
        if (!best_live || better(s, *best_live)) best_live = s;
      } else {
        walk(lp);
      }
      prefix.pop_back();
    }
  };
  walk(0.0);
  return best_finished ? *best_finished : *best_live;
}

}  // namespace fixtures
