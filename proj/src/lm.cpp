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

#include "dialogkit/lm.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dialogkit/softmax.hpp"

namespace dialogkit {

Logits::Logits(Eigen::VectorXd values) : values_(std::move(values)) {
  if (!values_.allFinite()) {
    throw std::invalid_argument("logits must be finite");
  }
}

Distribution::Distribution(Eigen::VectorXd probs) : probs_(std::move(probs)) {
  if (probs_.size() == 0) throw std::invalid_argument("empty distribution");
  if ((probs_.array() < 0.0).any() || !probs_.allFinite()) {
    throw std::invalid_argument("distribution has negative or non-finite mass");
  }
  if (std::abs(probs_.sum() - 1.0) > kSumTolerance) {
    throw std::invalid_argument("distribution does not sum to one");
  }
}

LanguageModel::LanguageModel(std::size_t context_window)
    : context_window_(context_window) {
  if (context_window_ == 0) {
    throw std::invalid_argument("context window must be positive");
  }
}

Logits LanguageModel::next_token_logits(
    std::span<const TokenId> context) const {
  if (context.size() > context_window_) {
    context = context.subspan(context.size() - context_window_);
  }
  std::vector<TokenId> history;
  history.reserve(context.size() + 1);
  history.push_back(Vocab::kBos);
  history.insert(history.end(), context.begin(), context.end());
  Logits out = logits_for_history(history);
  if (out.size() != vocab().size()) {
    throw std::logic_error("model returned logits of the wrong size");
  }
  return out;
}

Distribution next_distribution(const LanguageModel& model,
                               std::span<const TokenId> context,
                               double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("invalid temperature");
  return Distribution(
      softmax(model.next_token_logits(context).values(), temperature));
}

Logits logits_from_probs(const Eigen::VectorXd& probs) {
  Eigen::VectorXd z(probs.size());
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs(i) < 0.0) throw std::invalid_argument("negative probability");
    z(i) = probs(i) > 0.0 ? std::log(probs(i)) : kImpossibleLogit;
  }
  return Logits(std::move(z));
}

}  // namespace dialogkit
