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

#include "dialogkit/repetition.hpp"

#include <cctype>
#include <cmath>
#include <map>
#include <stdexcept>

#include "dialogkit/text.hpp"

namespace dialogkit {

std::string to_string(RepetitionMode m) {
  return m == RepetitionMode::kContiguous ? "contiguous" : "subsequence";
}

RepetitionMode parse_repetition_mode(const std::string& s) {
  if (s == "contiguous") return RepetitionMode::kContiguous;
  if (s == "subsequence") return RepetitionMode::kSubsequence;
  throw std::invalid_argument("rep-mode must be contiguous or subsequence");
}

void RepetitionConfig::validate() const {
  if (min_tokens < 1) throw std::invalid_argument("min_tokens must be >= 1");
  if (!(min_fraction > 0.0 && min_fraction <= 1.0)) {
    throw std::invalid_argument("min_fraction must be in (0, 1]");
  }
}

std::size_t RepetitionConfig::threshold(std::size_t len_a,
                                        std::size_t len_b) const {
  const double shorter = static_cast<double>(std::min(len_a, len_b));
  const auto frac = static_cast<std::size_t>(std::ceil(min_fraction * shorter));
  return std::max(static_cast<std::size_t>(min_tokens), frac);
}

namespace {

bool is_edge_punct(char32_t cp) {
  if (cp < 0x80) return std::ispunct(static_cast<int>(cp)) != 0;
  // General punctuation and CJK/fullwidth punctuation.
  return (cp >= 0x2000 && cp <= 0x206F) || (cp >= 0x3000 && cp <= 0x303F) ||
         (cp >= 0xFF01 && cp <= 0xFF0F) || cp == 0xA1 || cp == 0xBF ||
         cp == 0xAB || cp == 0xBB;
}

}  // namespace

std::vector<std::string> repetition_tokens(std::string_view turn,
                                           bool normalize) {
  std::vector<std::string> out;
  for (const auto& raw : text::split_whitespace(turn)) {
    if (!normalize) {
      out.push_back(raw);
      continue;
    }
    const std::vector<char32_t> cps = text::utf8_decode(text::to_lower_ascii(raw));
    std::size_t lo = 0, hi = cps.size();
    while (lo < hi && is_edge_punct(cps[lo])) ++lo;
    while (hi > lo && is_edge_punct(cps[hi - 1])) --hi;
    if (lo == hi) continue;
    std::string tok;
    for (std::size_t i = lo; i < hi; ++i) tok += text::utf8_encode(cps[i]);
    out.push_back(std::move(tok));
  }
  return out;
}

std::optional<RepetitionMatch> is_cross_turn_repetition(
    std::span<const std::string> history, std::string_view candidate,
    const RepetitionConfig& cfg) {
  cfg.validate();
  const auto cand = repetition_tokens(candidate, cfg.normalize);
  if (cand.empty()) return std::nullopt;
  for (std::size_t t = 0; t < history.size(); ++t) {
    const auto prior = repetition_tokens(history[t], cfg.normalize);
    const std::size_t run = longest_common_run(cand, prior, cfg.mode);
    const std::size_t need = cfg.threshold(cand.size(), prior.size());
    if (run >= need) return RepetitionMatch{t, run, need};
  }
  return std::nullopt;
}

bool is_in_turn_repetition(std::span<const std::string> tokens, int n) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  const auto un = static_cast<std::size_t>(n);
  if (tokens.size() < un) return false;
  std::map<std::vector<std::string>, int> seen;
  for (std::size_t i = 0; i + un <= tokens.size(); ++i) {
    std::vector<std::string> gram(tokens.begin() + i, tokens.begin() + i + un);
    if (++seen[std::move(gram)] >= 2) return true;
  }
  return false;
}

bool is_in_turn_repetition(std::string_view turn, int n, bool normalize) {
  const auto toks = repetition_tokens(turn, normalize);
  return is_in_turn_repetition(std::span<const std::string>(toks), n);
}

FilterResult filter_candidates(std::span<const std::string> history,
                               std::span<const std::string> candidates,
                               const RepetitionConfig& cfg) {
  FilterResult out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (auto m = is_cross_turn_repetition(history, candidates[i], cfg)) {
      out.removed.push_back({i, m->turn});
    } else {
      out.kept.push_back(i);
    }
  }
  if (out.kept.empty() && !candidates.empty()) {
    out.kept.push_back(0);
    out.forced = true;
  }
  return out;
}

}  // namespace dialogkit
