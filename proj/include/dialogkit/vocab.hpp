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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dialogkit {

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

/// Token inventory with dense ids. Ids 0..3 are always the reserved
/// boundary tokens; regular tokens follow in insertion order.
class Vocab {
 public:
  static constexpr TokenId kBos = 0;
  static constexpr TokenId kEos = 1;
  static constexpr TokenId kUnk = 2;
  static constexpr TokenId kSep = 3;
  static constexpr TokenId kNumReserved = 4;

  static constexpr std::string_view kBosToken = "<s>";
  static constexpr std::string_view kEosToken = "</s>";
  static constexpr std::string_view kUnkToken = "<unk>";
  static constexpr std::string_view kSepToken = "<sep>";

  Vocab();
  /// Reserved token strings in `tokens` are skipped; any other duplicate
  /// throws std::invalid_argument("duplicate token").
  explicit Vocab(std::span<const std::string> tokens);

  TokenId size() const { return static_cast<TokenId>(tokens_.size()); }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::optional<TokenId> find(std::string_view token) const;
  /// Maps out-of-vocabulary strings to kUnk.
  TokenId id(std::string_view token) const;
  TokenSeq encode(std::span<const std::string> tokens) const;
  std::vector<std::string> decode(std::span<const TokenId> ids) const;

  static bool is_reserved(TokenId id) { return id >= 0 && id < kNumReserved; }

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace dialogkit
