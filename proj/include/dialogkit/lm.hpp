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

#include <Eigen/Core>
#include <cstddef>
#include <span>

#include "dialogkit/vocab.hpp"

namespace dialogkit {

/// Unnormalised next-token scores, one per vocabulary entry. All finite.
class Logits {
 public:
  Logits() = default;
  explicit Logits(Eigen::VectorXd values);

  const Eigen::VectorXd& values() const { return values_; }
  Eigen::Index size() const { return values_.size(); }
  double operator[](TokenId id) const { return values_(id); }

  friend bool operator==(const Logits& a, const Logits& b) {
    return a.values_.size() == b.values_.size() && a.values_ == b.values_;
  }

 private:
  Eigen::VectorXd values_;
};

/// Probability vector over the vocabulary: entries >= 0, sum within 1e-9
/// of one. The constructor validates both.
class Distribution {
 public:
  static constexpr double kSumTolerance = 1e-9;

  explicit Distribution(Eigen::VectorXd probs);

  const Eigen::VectorXd& probs() const { return probs_; }
  Eigen::Index size() const { return probs_.size(); }
  double operator[](TokenId id) const { return probs_(id); }

  friend bool operator==(const Distribution& a, const Distribution& b) {
    return a.probs_.size() == b.probs_.size() && a.probs_ == b.probs_;
  }

 private:
  Eigen::VectorXd probs_;
};

/// Conditional next-token model. Implementations are immutable once built
/// and deterministic: equal contexts give bitwise-equal logits.
///
/// Callers pass the raw context; the base class keeps at most
/// `context_window()` trailing tokens and prepends BOS before handing the
/// history to the implementation.
class LanguageModel {
 public:
  static constexpr std::size_t kDefaultContextWindow = 128;

  explicit LanguageModel(std::size_t context_window = kDefaultContextWindow);
  virtual ~LanguageModel() = default;

  virtual const Vocab& vocab() const = 0;

  Logits next_token_logits(std::span<const TokenId> context) const;
  std::size_t context_window() const { return context_window_; }

 protected:
  /// `history` always starts with Vocab::kBos.
  virtual Logits logits_for_history(std::span<const TokenId> history) const = 0;

 private:
  std::size_t context_window_;
};

/// Softmax of the model's logits at temperature T (> 0).
Distribution next_distribution(const LanguageModel& model,
                               std::span<const TokenId> context,
                               double temperature = 1.0);

/// Logit used for "impossible" tokens in table-built models. Finite, and far
/// enough below any real logit that exp() underflows to exactly zero for
/// every temperature up to 1000.
inline constexpr double kImpossibleLogit = -1e6;

/// log(p) per entry, with p == 0 mapped to kImpossibleLogit.
Logits logits_from_probs(const Eigen::VectorXd& probs);

}  // namespace dialogkit
