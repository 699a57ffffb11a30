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

#include "dialogkit/metrics.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <stdexcept>
#include <tuple>

#include "dialogkit/text.hpp"

namespace dialogkit {

bool majority(std::span<const bool> labels) {
  if (labels.empty()) throw std::invalid_argument("majority of no labels");
  std::size_t yes = 0;
  for (bool b : labels) yes += b;
  return 2 * yes > labels.size();
}

bool majority(const std::vector<bool>& labels) {
  if (labels.empty()) throw std::invalid_argument("majority of no labels");
  std::size_t yes = 0;
  for (bool b : labels) yes += b;
  return 2 * yes > labels.size();
}

TurnLabels::TurnLabels(std::vector<bool> sensible, std::vector<bool> specific)
    : sensible_(std::move(sensible)), specific_(std::move(specific)) {
  if (sensible_.empty()) throw std::invalid_argument("turn has no labels");
  if (sensible_.size() != specific_.size()) {
    throw std::invalid_argument("sensible and specific label counts differ");
  }
  for (std::size_t i = 0; i < sensible_.size(); ++i) {
    if (!sensible_[i]) specific_[i] = false;
  }
}

EvalResult aggregate(std::span<const TurnLabels> turns) {
  if (turns.empty()) throw std::invalid_argument("no turns to aggregate");
  EvalResult r;
  r.n_turns = static_cast<int>(turns.size());
  std::size_t s = 0, p = 0;
  for (const auto& t : turns) {
    const bool ms = majority(t.sensible());
    const bool mp = majority(t.specific());
    r.sensible_majority.push_back(ms);
    r.specific_majority.push_back(mp);
    s += ms;
    p += mp;
  }
  const auto n = static_cast<double>(turns.size());
  r.sensibleness = static_cast<double>(s) / n;
  r.specificity = static_cast<double>(p) / n;
  r.ssa = (r.sensibleness + r.specificity) / 2.0;
  return r;
}

namespace {

LabelMatrix to_matrix(std::span<const TurnLabels> turns, bool sensible) {
  LabelMatrix m;
  for (const auto& t : turns) {
    const auto& src = sensible ? t.sensible() : t.specific();
    m.emplace_back(src.begin(), src.end());
  }
  return m;
}

}  // namespace

LabelMatrix sensible_matrix(std::span<const TurnLabels> turns) {
  return to_matrix(turns, true);
}
LabelMatrix specific_matrix(std::span<const TurnLabels> turns) {
  return to_matrix(turns, false);
}

double pairwise_agreement(const LabelMatrix& m) {
  if (m.empty()) throw std::invalid_argument("no items");
  double sum = 0.0;
  for (const auto& item : m) {
    std::size_t yes = 0, n = 0;
    for (const auto& l : item) {
      if (!l) continue;
      ++n;
      yes += *l;
    }
    if (n < 2) throw std::invalid_argument("item with fewer than 2 labels");
    const std::size_t no = n - yes;
    const double agreeing = yes * (yes - 1) / 2.0 + no * (no - 1) / 2.0;
    sum += agreeing / (n * (n - 1) / 2.0);
  }
  return sum / static_cast<double>(m.size());
}

Eigen::Matrix2d coincidence_matrix(const LabelMatrix& m) {
  Eigen::Matrix2d o = Eigen::Matrix2d::Zero();
  for (const auto& item : m) {
    Eigen::Vector2d counts = Eigen::Vector2d::Zero();
    for (const auto& l : item) {
      if (l) counts(*l ? 1 : 0) += 1.0;
    }
    const double mu = counts.sum();
    if (mu < 2.0) continue;
    // Ordered pairs of distinct labels within the item, weighted 1/(m-1).
    Eigen::Matrix2d pairs = counts * counts.transpose();
    pairs.diagonal() -= counts;
    o += pairs / (mu - 1.0);
  }
  return o;
}

double krippendorff_alpha(const LabelMatrix& m) {
  const Eigen::Matrix2d o = coincidence_matrix(m);
  const double n = o.sum();
  if (n < 2.0) throw std::invalid_argument("fewer than 2 pairable labels");
  const Eigen::Vector2d marginals = o.rowwise().sum();
  const double observed = o(0, 1) + o(1, 0);
  const double expected = 2.0 * marginals(0) * marginals(1) / (n - 1.0);
  if (expected == 0.0) throw DegenerateError("zero expected disagreement");
  return 1.0 - observed / expected;
}

PerplexityResult evaluate_perplexity(const LanguageModel& model,
                                     std::span<const TokenSeq> test) {
  if (test.empty()) throw std::invalid_argument("empty test set");
  PerplexityResult r;
  TokenSeq ctx;
  for (const auto& seq : test) {
    ctx.clear();
    for (std::size_t i = 0; i <= seq.size(); ++i) {
      const TokenId target = i < seq.size() ? seq[i] : Vocab::kEos;
      const Distribution d = next_distribution(model, ctx);
      const double p = d[target];
      if (!(p > 0.0)) {
        throw std::domain_error("zero-probability token " + std::to_string(target));
      }
      r.nll -= std::log(p);
      ++r.tokens;
      ctx.push_back(target);
    }
  }
  r.perplexity = std::exp(r.nll / static_cast<double>(r.tokens));
  return r;
}

double perplexity(const LanguageModel& model, std::span<const TokenSeq> test) {
  return evaluate_perplexity(model, test).perplexity;
}

RegressionFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("x and y differ in length");
  const auto n = static_cast<Eigen::Index>(x.size());
  if (n < 2) throw std::invalid_argument("need at least 2 points");
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), n), yv(y.data(), n);
  if ((xv.array() == xv(0)).all()) throw DegenerateError("degenerate variance in x");
  const double y_mean = yv.mean();
  const double ss_tot = (yv.array() - y_mean).square().sum();
  if (ss_tot == 0.0) throw DegenerateError("degenerate variance");

  Eigen::MatrixXd design(n, 2);
  design.col(0) = xv;
  design.col(1).setOnes();
  const Eigen::Vector2d beta = design.colPivHouseholderQr().solve(yv);
  const double ss_res = (yv - design * beta).squaredNorm();
  RegressionFit fit;
  fit.slope = beta(0);
  fit.intercept = beta(1);
  fit.r_squared = std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
  return fit;
}

namespace {

bool parse_bit(const std::string& s, int lineno) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw FormatError("bad_record", "line " + std::to_string(lineno) +
                                      ": label must be 0 or 1, got '" + s + "'");
}

}  // namespace

std::vector<LabelRecord> read_label_records(std::istream& in) {
  std::vector<LabelRecord> out;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto f = text::split_record(line);
    if (f.size() != 5) {
      throw FormatError("bad_record",
                        "line " + std::to_string(lineno) +
                            ": expected conversation, turn, worker, sensible, specific");
    }
    LabelRecord r;
    r.conversation = f[0];
    try {
      std::size_t used = 0;
      r.turn = std::stoi(f[1], &used);
      if (used != f[1].size() || r.turn < 0) throw std::invalid_argument("turn");
    } catch (const std::exception&) {
      throw FormatError("bad_record", "line " + std::to_string(lineno) + ": bad turn index");
    }
    r.worker = f[2];
    r.sensible = parse_bit(f[3], lineno);
    r.specific = parse_bit(f[4], lineno);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<LabelRecord> read_label_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("io", "cannot open " + path);
  return read_label_records(in);
}

std::map<TurnKey, TurnLabels> group_labels(std::span<const LabelRecord> records) {
  std::map<TurnKey, std::pair<std::vector<bool>, std::vector<bool>>> raw;
  std::set<std::tuple<std::string, int, std::string>> seen;
  for (const auto& r : records) {
    if (!seen.emplace(r.conversation, r.turn, r.worker).second) {
      throw FormatError("duplicate_label", "worker '" + r.worker + "' labelled " +
                                               r.conversation + " turn " +
                                               std::to_string(r.turn) + " twice");
    }
    auto& [s, p] = raw[{r.conversation, r.turn}];
    s.push_back(r.sensible);
    p.push_back(r.specific);
  }
  std::map<TurnKey, TurnLabels> out;
  for (auto& [k, v] : raw) out.emplace(k, TurnLabels(std::move(v.first), std::move(v.second)));
  return out;
}

std::vector<TurnLabels> labels_in_order(const std::map<TurnKey, TurnLabels>& grouped) {
  std::vector<TurnLabels> out;
  for (const auto& [_, t] : grouped) out.push_back(t);
  return out;
}

}  // namespace dialogkit
