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

#include "dialogkit/table_lm.hpp"

#include <algorithm>
#include <stdexcept>

namespace dialogkit {

TableLm::TableLm(Vocab vocab, Logits default_logits, Entries entries,
                 std::size_t context_window)
    : LanguageModel(context_window),
      vocab_(std::move(vocab)),
      default_(std::move(default_logits)),
      entries_(std::move(entries)) {
  if (default_.size() != vocab_.size()) {
    throw std::invalid_argument("default logits size must equal vocab size");
  }
  for (const auto& [key, logits] : entries_) {
    if (key.empty()) throw std::invalid_argument("empty table key");
    if (logits.size() != vocab_.size()) {
      throw std::invalid_argument("table logits size must equal vocab size");
    }
    longest_key_ = std::max(longest_key_, key.size());
  }
}

Logits TableLm::logits_for_history(std::span<const TokenId> history) const {
  TokenSeq key;
  for (size_t len = std::min(longest_key_, history.size()); len > 0; --len) {
    key.assign(history.end() - len, history.end());
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  }
  return default_;
}

}  // namespace dialogkit
