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
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dialogkit/lm.hpp"

namespace dialogkit {

/// Raised when a statistic is undefined for the given data.
class DegenerateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Strict majority; an exact tie is false. Empty input throws.
bool majority(std::span<const bool> labels);
bool majority(const std::vector<bool>& labels);

/// Per-worker labels for one bot turn. The constructor applies the
/// not-sensible => not-specific coercion.
class TurnLabels {
 public:
  TurnLabels(std::vector<bool> sensible, std::vector<bool> specific);
  const std::vector<bool>& sensible() const { return sensible_; }
  const std::vector<bool>& specific() const { return specific_; }
  std::size_t workers() const { return sensible_.size(); }

 private:
  std::vector<bool> sensible_;
  std::vector<bool> specific_;
};

struct EvalResult {
  double sensibleness = 0.0;
  double specificity = 0.0;
  double ssa = 0.0;
  int n_turns = 0;
  std::vector<bool> sensible_majority;
  std::vector<bool> specific_majority;
};

/// Mean majority labels and their average. Empty input throws.
EvalResult aggregate(std::span<const TurnLabels> turns);

/// Items x labels; std::nullopt marks a missing label.
using LabelMatrix = std::vector<std::vector<std::optional<bool>>>;

LabelMatrix sensible_matrix(std::span<const TurnLabels> turns);
LabelMatrix specific_matrix(std::span<const TurnLabels> turns);

/// Mean over items of the share of agreeing unordered label pairs. Items
/// with fewer than two labels throw.
double pairwise_agreement(const LabelMatrix& m);

/// Nominal 2x2 coincidence matrix; items with fewer than two labels are
/// skipped.
Eigen::Matrix2d coincidence_matrix(const LabelMatrix& m);

/// Krippendorff's alpha for nominal binary data. Throws DegenerateError
/// ("zero expected disagreement") when only one value occurs, and
/// std::invalid_argument when fewer than two pairable labels exist.
double krippendorff_alpha(const LabelMatrix& m);

struct PerplexityResult {
  double perplexity = 0.0;
  double nll = 0.0;     ///< total, natural log
  long long tokens = 0; ///< includes one EOS per sequence
};

/// Each sequence is scored from an empty context and closed with EOS.
/// Throws std::domain_error on a zero-probability token.
PerplexityResult evaluate_perplexity(const LanguageModel& model,
                                     std::span<const TokenSeq> test);
double perplexity(const LanguageModel& model, std::span<const TokenSeq> test);

struct RegressionFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = slope * x + intercept.
RegressionFit fit_line(std::span<const double> x, std::span<const double> y);

/// One row of a label file: conversation, turn index, worker, two bits.
struct LabelRecord {
  std::string conversation;
  int turn = 0;
  std::string worker;
  bool sensible = false;
  bool specific = false;
};

std::vector<LabelRecord> read_label_records(std::istream& in);
std::vector<LabelRecord> read_label_file(const std::string& path);

using TurnKey = std::pair<std::string, int>;

/// Groups records by (conversation, turn) in key order; workers keep file
/// order. Duplicate (conversation, turn, worker) throws FormatError.
std::map<TurnKey, TurnLabels> group_labels(std::span<const LabelRecord> records);
std::vector<TurnLabels> labels_in_order(const std::map<TurnKey, TurnLabels>& grouped);

}  // namespace dialogkit
