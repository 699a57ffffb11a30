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

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "dialogkit/lm.hpp"

namespace dialogkit {

/// Interpolated add-delta n-gram model.
///
///   P(w | h) = sum_k weight_k * (c(h_k w) + delta) / (c(h_k) + delta * |V|)
///
/// where h_k is the last k-1 tokens of the history (k = 1..order), padded on
/// the left with BOS. Every training sequence is padded the same way and
/// terminated with EOS, so EOS is a predicted event and BOS never is.
/// Since delta > 0 every token keeps nonzero probability.
class NGramLm final : public LanguageModel {
 public:
  struct Row {
    std::uint64_t total = 0;
    std::map<TokenId, std::uint64_t> next;
    friend bool operator==(const Row&, const Row&) = default;
  };
  /// tables[k] holds rows keyed by histories of exactly k tokens.
  using Table = std::map<TokenSeq, Row>;

  /// Errors: empty corpus -> "empty corpus"; delta <= 0 -> "invalid
  /// smoothing"; order < 1 -> "invalid order". `weights` defaults to 1/order
  /// each and must otherwise have `order` non-negative entries summing to 1.
  static NGramLm train(Vocab vocab, std::span<const TokenSeq> corpus,
                       int order, double delta,
                       std::vector<double> weights = {},
                       std::size_t context_window = kDefaultContextWindow);

  /// Order-1 model with no counts: exactly 1/|V| for every token.
  static NGramLm uniform(Vocab vocab, double delta = 1.0);

  const Vocab& vocab() const override { return vocab_; }
  int order() const { return order_; }
  double delta() const { return delta_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<Table>& tables() const { return tables_; }

  /// Versioned plain-text format; doubles are written as hex floats so a
  /// save/load cycle is bit-exact.
  void save(std::ostream& out) const;
  static NGramLm load(std::istream& in);
  void save(const std::string& path) const;
  static NGramLm load(const std::string& path);

  friend bool operator==(const NGramLm& a, const NGramLm& b) {
    return a.vocab_ == b.vocab_ && a.order_ == b.order_ &&
           a.delta_ == b.delta_ && a.weights_ == b.weights_ &&
           a.tables_ == b.tables_ &&
           a.context_window() == b.context_window();
  }

 protected:
  Logits logits_for_history(std::span<const TokenId> history) const override;

 private:
  NGramLm(Vocab vocab, int order, double delta, std::vector<double> weights,
          std::vector<Table> tables, std::size_t context_window);

  Vocab vocab_;
  int order_;
  double delta_;
  std::vector<double> weights_;
  std::vector<Table> tables_;
};

}  // namespace dialogkit
