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

#include <iosfwd>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dialogkit {

/// Text <-> subword pieces.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<std::string> encode(std::string_view text) const = 0;
  virtual std::string decode(std::span<const std::string> pieces) const = 0;
  /// Every piece encode() can emit, in a stable order.
  virtual std::vector<std::string> vocabulary() const = 0;
};

/// Splits on whitespace; decode joins with single spaces. Its vocabulary is
/// open, so vocabulary() is empty.
class WhitespaceTokenizer final : public Tokenizer {
 public:
  std::vector<std::string> encode(std::string_view text) const override;
  std::string decode(std::span<const std::string> pieces) const override;
  std::vector<std::string> vocabulary() const override { return {}; }
};

/// Byte-pair encoding over Unicode code points. Text is cut into segments
/// at every space, the space staying at the front of its segment; merges
/// never cross segments. Characters outside the training inventory encode
/// as kUnkPiece, which decodes to U+FFFD.
class BpeModel final : public Tokenizer {
 public:
  static constexpr std::string_view kUnkPiece = "<unk>";
  using Merge = std::pair<std::string, std::string>;

  /// Learns merges until `vocab_size` pieces exist (characters plus merged
  /// pieces) or no adjacent pair occurs twice. Ties in pair frequency go to
  /// the lexicographically smallest (left, right). Throws
  /// std::invalid_argument when vocab_size is below the character count.
  static BpeModel train(std::span<const std::string> corpus, int vocab_size);

  BpeModel(std::vector<std::string> chars, std::vector<Merge> merges,
           int vocab_size);

  std::vector<std::string> encode(std::string_view text) const override;
  std::string decode(std::span<const std::string> pieces) const override;
  std::vector<std::string> vocabulary() const override;

  const std::vector<std::string>& chars() const { return chars_; }
  const std::vector<Merge>& merges() const { return merges_; }
  int vocab_size() const { return vocab_size_; }

  void save(std::ostream& out) const;
  void save(const std::string& path) const;
  static BpeModel load(std::istream& in);
  static BpeModel load(const std::string& path);

  friend bool operator==(const BpeModel& a, const BpeModel& b) {
    return a.chars_ == b.chars_ && a.merges_ == b.merges_ &&
           a.vocab_size_ == b.vocab_size_;
  }

 private:
  std::vector<std::string> chars_;
  std::vector<Merge> merges_;
  int vocab_size_;
  std::set<std::string> char_set_;
  std::map<Merge, std::size_t> rank_;
};

/// Segments used by BpeModel: each space starts a new segment.
std::vector<std::string> bpe_segments(std::string_view text);

/// Loads a tokenizer by name: "whitespace" or a BPE model file path.
std::unique_ptr<Tokenizer> load_tokenizer(const std::string& spec);

}  // namespace dialogkit
