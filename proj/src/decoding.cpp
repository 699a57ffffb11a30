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

#include "dialogkit/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dialogkit {

std::string to_string(RankBy r) {
  return r == RankBy::kNormalized ? "normalized" : "raw";
}

RankBy parse_rank_by(const std::string& s) {
  if (s == "normalized") return RankBy::kNormalized;
  if (s == "raw") return RankBy::kRaw;
  throw std::invalid_argument("rank_by must be normalized or raw");
}

void DecodingConfig::validate() const {
  if (!(temperature > 0.0)) throw std::invalid_argument("invalid temperature");
  if (top_k && *top_k < 1) throw std::invalid_argument("invalid k");
  if (num_samples < 1) throw std::invalid_argument("num_samples must be >= 1");
  if (max_response_tokens < 1) {
    throw std::invalid_argument("max_response_tokens must be >= 1");
  }
}

Candidate Candidate::make(TokenSeq tokens, double logprob_sum) {
  if (tokens.empty()) throw std::invalid_argument("empty response");
  Candidate c;
  c.token_count = static_cast<int>(tokens.size());
  c.tokens = std::move(tokens);
  c.logprob_sum = logprob_sum;
  c.score = logprob_sum / c.token_count;
  return c;
}

Distribution top_k_filter(const Distribution& d, int k) {
  if (k < 1) throw std::invalid_argument("invalid k");
  const Eigen::Index n = d.size();
  if (k >= n) return d;
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto& p = d.probs();
  std::partial_sort(order.begin(), order.begin() + k, order.end(),
                    [&](Eigen::Index a, Eigen::Index b) {
                      return p(a) != p(b) ? p(a) > p(b) : a < b;
                    });
  Eigen::VectorXd kept = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < k; ++i) kept(order[i]) = p(order[i]);
  const double mass = kept.sum();
  if (!(mass > 0.0)) throw std::invalid_argument("top-k kept no mass");
  return Distribution(kept / mass);
}

TokenId sample_token(const Distribution& d, Rng& rng) {
  const auto& p = d.probs();
  const double target = rng.uniform() * p.sum();
  double cumulative = 0.0;
  Eigen::Index last_positive = -1;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) <= 0.0) continue;
    last_positive = i;
    cumulative += p(i);
    if (target < cumulative) return static_cast<TokenId>(i);
  }
  return static_cast<TokenId>(last_positive);
}

namespace {

Distribution decode_distribution(const LanguageModel& model,
                                 std::span<const TokenId> seq,
                                 double temperature, std::optional<int> top_k) {
  Distribution d = next_distribution(model, seq, temperature);
  if (top_k) d = top_k_filter(d, *top_k);
  return d;
}

}  // namespace

Candidate sample_response(const LanguageModel& model,
                          std::span<const TokenId> context,
                          const DecodingConfig& cfg, Rng& rng) {
  cfg.validate();
  TokenSeq seq(context.begin(), context.end());
  TokenSeq response;
  double logprob = 0.0;
  while (static_cast<int>(response.size()) < cfg.max_response_tokens) {
    const Distribution d =
        decode_distribution(model, seq, cfg.temperature, cfg.top_k);
    const TokenId tok = sample_token(d, rng);
    logprob += std::log(d[tok]);
    response.push_back(tok);
    seq.push_back(tok);
    if (tok == Vocab::kEos) break;
  }
  return Candidate::make(std::move(response), logprob);
}

Candidate score_response(const LanguageModel& model,
                         std::span<const TokenId> context,
                         std::span<const TokenId> response, double temperature,
                         std::optional<int> top_k) {
  if (response.empty()) throw std::invalid_argument("empty response");
  TokenSeq seq(context.begin(), context.end());
  double logprob = 0.0;
  for (TokenId tok : response) {
    const Distribution d = decode_distribution(model, seq, temperature, top_k);
    logprob += std::log(d[tok]);
    seq.push_back(tok);
  }
  return Candidate::make(TokenSeq(response.begin(), response.end()), logprob);
}

bool ranks_before(const Candidate& a, const Candidate& b, RankBy by) {
  const double a1 = by == RankBy::kNormalized ? a.score : a.logprob_sum;
  const double b1 = by == RankBy::kNormalized ? b.score : b.logprob_sum;
  if (a1 != b1) return a1 > b1;
  const double a2 = by == RankBy::kNormalized ? a.logprob_sum : a.score;
  const double b2 = by == RankBy::kNormalized ? b.logprob_sum : b.score;
  if (a2 != b2) return a2 > b2;
  return a.tokens < b.tokens;
}

void rank_candidates(std::vector<Candidate>& candidates, RankBy by) {
  std::stable_sort(candidates.begin(), candidates.end(),
                   [by](const Candidate& a, const Candidate& b) {
                     return ranks_before(a, b, by);
                   });
}

std::vector<Candidate> sample_and_rank(const LanguageModel& model,
                                       std::span<const TokenId> context,
                                       const DecodingConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  std::vector<Candidate> out;
  out.reserve(cfg.num_samples);
  for (int i = 0; i < cfg.num_samples; ++i) {
    out.push_back(sample_response(model, context, cfg, rng));
  }
  rank_candidates(out, cfg.rank_by);
  return out;
}

Candidate beam_search(const LanguageModel& model,
                      std::span<const TokenId> context, int beam_width,
                      int max_response_tokens) {
  if (beam_width < 1) throw std::invalid_argument("beam_width must be >= 1");
  if (max_response_tokens < 1) {
    throw std::invalid_argument("max_response_tokens must be >= 1");
  }
  struct Hyp {
    TokenSeq tokens;
    double logprob;
  };
  const auto by_logprob = [](const Hyp& a, const Hyp& b) {
    return a.logprob != b.logprob ? a.logprob > b.logprob : a.tokens < b.tokens;
  };

  std::vector<Hyp> beams{{{}, 0.0}};
  std::optional<Candidate> best_finished;
  TokenSeq seq;
  for (int step = 0; step < max_response_tokens && !beams.empty(); ++step) {
    std::vector<Hyp> expansions;
    for (const auto& beam : beams) {
      seq.assign(context.begin(), context.end());
      seq.insert(seq.end(), beam.tokens.begin(), beam.tokens.end());
      const Distribution d = next_distribution(model, seq);
      for (TokenId tok = 0; tok < static_cast<TokenId>(d.size()); ++tok) {
        if (d[tok] <= 0.0) continue;
        Hyp next{beam.tokens, beam.logprob + std::log(d[tok])};
        next.tokens.push_back(tok);
        expansions.push_back(std::move(next));
      }
    }
    if (expansions.size() > static_cast<size_t>(beam_width)) {
      std::partial_sort(expansions.begin(), expansions.begin() + beam_width,
                        expansions.end(), by_logprob);
      expansions.resize(beam_width);
    }
    // Hypotheses that chose EOS retire from the beam.
    beams.clear();
    for (auto& hyp : expansions) {
      if (hyp.tokens.back() != Vocab::kEos) {
        beams.push_back(std::move(hyp));
        continue;
      }
      Candidate c = Candidate::make(std::move(hyp.tokens), hyp.logprob);
      if (!best_finished ||
          ranks_before(c, *best_finished, RankBy::kNormalized)) {
        best_finished = std::move(c);
      }
    }
  }
  if (best_finished) return *best_finished;

  std::optional<Candidate> best_live;
  for (auto& beam : beams) {
    Candidate c = Candidate::make(std::move(beam.tokens), beam.logprob);
    if (!best_live || ranks_before(c, *best_live, RankBy::kNormalized)) {
      best_live = std::move(c);
    }
  }
  if (!best_live) throw std::logic_error("beam search produced no hypothesis");
  return *best_live;
}

}  // namespace dialogkit
