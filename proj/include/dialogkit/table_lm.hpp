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

#include <map>

#include "dialogkit/lm.hpp"

namespace dialogkit {

/// Explicit context-suffix -> logits table. Lookup walks the BOS-prefixed
/// history and uses the longest key that is a suffix of it, falling back to
/// the default row. Keys may begin with BOS to pin a row to the start of a
/// sequence.
class TableLm final : public LanguageModel {
 public:
  using Entries = std::map<TokenSeq, Logits>;

  TableLm(Vocab vocab, Logits default_logits, Entries entries = {},
          std::size_t context_window = kDefaultContextWindow);

  const Vocab& vocab() const override { return vocab_; }
  const Logits& default_logits() const { return default_; }
  const Entries& entries() const { return entries_; }

 protected:
  Logits logits_for_history(std::span<const TokenId> history) const override;

 private:
  Vocab vocab_;
  Logits default_;
  Entries entries_;
  std::size_t longest_key_ = 0;
};

}  // namespace dialogkit
