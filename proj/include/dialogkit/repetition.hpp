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

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dialogkit {

enum class RepetitionMode { kContiguous, kSubsequence };

std::string to_string(RepetitionMode m);
RepetitionMode parse_repetition_mode(const std::string& s);

struct RepetitionConfig {
  RepetitionMode mode = RepetitionMode::kContiguous;
  int min_tokens = 3;
  double min_fraction = 0.5;
  bool normalize = true;

  void validate() const;
  /// max(min_tokens, ceil(min_fraction * min(len_a, len_b))).
  std::size_t threshold(std::size_t len_a, std::size_t len_b) const;
};

/// Word tokens of a turn. With `normalize`, text is lowercased and
/// punctuation is stripped from both ends of each whitespace token
/// (internal apostrophes survive); tokens left empty are dropped.
std::vector<std::string> repetition_tokens(std::string_view turn,
                                           bool normalize = true);

/// Longest common substring (contiguous) or longest common subsequence
/// length, in elements. O(|a|·|b|) time, O(|b|) memory.
template <typename T>
std::size_t longest_common_run(std::span<const T> a, std::span<const T> b,
                               RepetitionMode mode) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  std::size_t best = 0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1]) {
        cur[j] = prev[j - 1] + 1;
      } else {
        cur[j] = mode == RepetitionMode::kContiguous
                     ? 0
                     : std::max(prev[j], cur[j - 1]);
      }
      best = std::max(best, cur[j]);
    }
    std::swap(prev, cur);
  }
  return best;
}

inline std::size_t longest_common_run(const std::vector<std::string>& a,
                                      const std::vector<std::string>& b,
                                      RepetitionMode mode) {
  return longest_common_run(std::span<const std::string>(a),
                            std::span<const std::string>(b), mode);
}

struct RepetitionMatch {
  std::size_t turn;      ///< index into the history
  std::size_t run;       ///< common run length found
  std::size_t required;  ///< threshold it met
};

/// First prior turn (lowest index, either speaker) that the candidate
/// repeats, if any.
std::optional<RepetitionMatch> is_cross_turn_repetition(
    std::span<const std::string> history, std::string_view candidate,
    const RepetitionConfig& cfg = {});

/// True when some token n-gram occurs at least twice in the turn.
bool is_in_turn_repetition(std::span<const std::string> tokens, int n = 3);
bool is_in_turn_repetition(std::string_view turn, int n = 3,
                           bool normalize = true);

struct Removal {
  std::size_t candidate;  ///< index in the input list
  std::size_t turn;       ///< matched history turn
};

struct FilterResult {
  std::vector<std::size_t> kept;  ///< input indices, in input order
  std::vector<Removal> removed;
  bool forced = false;  ///< every candidate was flagged; kept = {0}
};

/// Drops candidates that repeat an earlier turn. `candidates` is ranked
/// best first; when all are flagged, the best one is kept and `forced` set.
FilterResult filter_candidates(std::span<const std::string> history,
                               std::span<const std::string> candidates,
                               const RepetitionConfig& cfg = {});

}  // namespace dialogkit
