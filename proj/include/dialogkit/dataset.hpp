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

#include <array>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dialogkit/tokenizer.hpp"

namespace dialogkit {

struct Message {
  std::string id;
  std::optional<std::string> parent_id;
  std::string author;
  std::string text;

  friend bool operator==(const Message&, const Message&) = default;
};

/// One conversation tree. Children are kept sorted by id.
class MessageTree {
 public:
  const std::string& root() const { return root_; }
  const Message& message(const std::string& id) const { return messages_.at(id); }
  const std::vector<std::string>& children(const std::string& id) const;
  std::size_t size() const { return messages_.size(); }
  /// Ids in canonical depth-first order (children by ascending id).
  std::vector<std::string> dfs_order() const;

 private:
  friend std::vector<MessageTree> build_forest(std::vector<Message>);
  std::string root_;
  std::map<std::string, Message> messages_;
  std::map<std::string, std::vector<std::string>> children_;
};

/// Groups messages into trees, sorted by root id. Throws FormatError with
/// code "duplicate_id", "missing_parent" or "cycle".
std::vector<MessageTree> build_forest(std::vector<Message> messages);

/// Record format: one message per line, four tab-separated escaped fields
/// (id, parent_id, author, text); an empty parent_id marks a root. Blank
/// lines are skipped. Throws FormatError("bad_record") naming the line.
std::vector<Message> read_messages(std::istream& in);
std::vector<Message> read_messages_file(const std::string& path);

enum class BotMatch { kSubstring, kWord };

struct FilterConfig {
  int min_subwords = 2;
  int max_subwords = 128;
  double min_alpha_fraction = 0.70;
  long long max_global_repeats = 100;
  double parent_overlap_threshold = 0.5;
  int overlap_ngram_order = 3;
  BotMatch bot_match = BotMatch::kSubstring;
  /// Returns true when the text is unsafe. Default: nothing is unsafe.
  std::function<bool(std::string_view)> unsafe;

  void validate() const;
};

enum class Rule {
  kSubwordCount = 1,
  kAlphaFraction = 2,
  kUrl = 3,
  kBotAuthor = 4,
  kGlobalRepeat = 5,
  kParentOverlap = 6,
  kSafety = 7,
};
constexpr int kNumRules = 7;

std::string rule_name(Rule r);

/// Removes every occurrence of the whitespace-normalised parent text from
/// the whitespace-normalised message. Result is whitespace-normalised.
std::string strip_parent_quote(std::string_view msg_text,
                               std::string_view parent_text);

/// Share of `a`'s distinct lowercased whitespace-token n-grams that also
/// occur in `b`; 0 when `a` has fewer than n tokens.
double ngram_overlap(std::string_view a, std::string_view b, int n);

/// Letters over non-whitespace code points (0 for an empty text).
double alpha_fraction(std::string_view text);

bool contains_url(std::string_view text);
bool is_bot_author(std::string_view author, BotMatch mode);

/// Rules 1..7 in order; the first violation is returned.
std::optional<Rule> message_passes_filters(const Message& msg,
                                           const Message* parent,
                                           long long global_count,
                                           const FilterConfig& cfg,
                                           const Tokenizer& tokenizer);

using GlobalCounts = std::unordered_map<std::string, long long>;

/// Exact multiset counts of raw message texts over all trees.
GlobalCounts corpus_pass1(std::span<const MessageTree> trees);

struct TrainingPair {
  std::vector<std::string> context;  ///< oldest first, 1..7 turns
  std::string response;

  friend bool operator==(const TrainingPair&, const TrainingPair&) = default;
};

constexpr int kMaxContextTurns = 7;

struct RemovalRecord {
  std::string id;
  Rule rule;
};

struct ExtractResult {
  std::vector<TrainingPair> pairs;
  std::vector<RemovalRecord> removals;  ///< direct removals only
  std::size_t cascaded = 0;             ///< descendants dropped with them
};

/// Canonical DFS over the tree. Each message is quote-stripped against its
/// (stripped) parent, then filtered; a removal drops its whole subtree.
/// Every surviving non-root message yields one pair.
ExtractResult extract_pairs(const MessageTree& tree, const FilterConfig& cfg,
                            const Tokenizer& tokenizer,
                            const GlobalCounts& counts);

struct MineSummary {
  std::size_t trees = 0;
  std::size_t messages = 0;
  std::size_t pairs = 0;
  std::size_t cascaded = 0;
  std::array<std::size_t, kNumRules> removed_by_rule{};
};

struct MineResult {
  std::vector<TrainingPair> pairs;
  std::vector<RemovalRecord> removals;
  MineSummary summary;
};

/// Both passes over a whole forest, trees in root-id order.
MineResult mine(std::span<const MessageTree> trees, const FilterConfig& cfg,
                const Tokenizer& tokenizer);

/// Context turns joined by " <sep> ", a tab, then the response; fields are
/// escaped like every record file.
std::string format_pair(const TrainingPair& p);
TrainingPair parse_pair(std::string_view line);
void write_pairs(std::ostream& out, std::span<const TrainingPair> pairs);
void write_removals(std::ostream& out, std::span<const RemovalRecord> removals);
void write_summary(std::ostream& out, const MineSummary& s);

}  // namespace dialogkit
