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
#include <vector>

#include "dialogkit/lm.hpp"
#include "dialogkit/rng.hpp"

namespace dialogkit {

enum class RankBy { kNormalized, kRaw };

std::string to_string(RankBy r);
RankBy parse_rank_by(const std::string& s);

struct DecodingConfig {
  double temperature = 0.88;
  std::optional<int> top_k;
  int num_samples = 20;
  int max_response_tokens = 128;
  std::uint64_t seed = 0;
  RankBy rank_by = RankBy::kNormalized;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// A decoded response. `tokens` includes the terminating EOS when the
/// response ended naturally; `score` is always logprob_sum / token_count.
struct Candidate {
  TokenSeq tokens;
  double logprob_sum = 0.0;
  int token_count = 0;
  double score = 0.0;

  static Candidate make(TokenSeq tokens, double logprob_sum);
  bool finished() const {
    return !tokens.empty() && tokens.back() == Vocab::kEos;
  }

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// Zeroes everything outside the k most probable tokens (ties at the
/// boundary go to the lower id) and renormalises. k >= |V| returns the
/// input unchanged. k < 1 -> "invalid k".
Distribution top_k_filter(const Distribution& d, int k);

/// Inverse-CDF draw with one uniform from `rng`; never returns a
/// zero-probability token.
TokenId sample_token(const Distribution& d, Rng& rng);

/// Plain ancestral sampling at cfg.temperature (optionally top-k filtered)
/// until EOS or cfg.max_response_tokens. logprob_sum accumulates the log
/// probability of each token under the distribution it was drawn from.
Candidate sample_response(const LanguageModel& model,
                          std::span<const TokenId> context,
                          const DecodingConfig& cfg, Rng& rng);

/// Sampling-free log-likelihood of `response` given `context` under the same
/// distribution sample_response would use for (temperature, top_k).
Candidate score_response(const LanguageModel& model,
                         std::span<const TokenId> context,
                         std::span<const TokenId> response,
                         double temperature = 1.0,
                         std::optional<int> top_k = std::nullopt);

/// Strict weak order used everywhere candidates are ranked. Normalized:
/// score desc, then logprob_sum desc, then tokens lexicographically.
/// Raw: logprob_sum desc, then score desc, then tokens.
bool ranks_before(const Candidate& a, const Candidate& b, RankBy by);
void rank_candidates(std::vector<Candidate>& candidates, RankBy by);

/// Draws cfg.num_samples independent responses from one Rng seeded with
/// cfg.seed and returns them best first.
std::vector<Candidate> sample_and_rank(const LanguageModel& model,
                                       std::span<const TokenId> context,
                                       const DecodingConfig& cfg);

/// Beam search over token expansions. Each step extends every live beam by
/// every token of nonzero probability and keeps the `beam_width` highest
/// log-likelihoods; kept expansions ending in EOS retire to the finished
/// pool, so the beam narrows as hypotheses finish (width 1 is greedy).
/// Returns the finished hypothesis with the best length-normalised score,
/// or, when nothing finished, the best live beam at max length.
Candidate beam_search(const LanguageModel& model,
                      std::span<const TokenId> context, int beam_width,
                      int max_response_tokens);

}  // namespace dialogkit
