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

#include "dialogkit/ngram_lm.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "dialogkit/text.hpp"

namespace dialogkit {
namespace {

constexpr const char* kMagic = "dialogkit-ngram";
constexpr int kFormatVersion = 1;

std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw FormatError("bad_model", "bad number in model file: " + s);
  }
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0') {
    throw FormatError("bad_model", "bad integer in model file: " + s);
  }
  return v;
}

std::string expect_key(std::istream& in, const std::string& key) {
  std::string line;
  if (!std::getline(in, line)) {
    throw FormatError("bad_model", "model file truncated before " + key);
  }
  if (line.rfind(key + " ", 0) != 0) {
    throw FormatError("bad_model", "expected '" + key + "' line");
  }
  return line.substr(key.size() + 1);
}

}  // namespace

NGramLm::NGramLm(Vocab vocab, int order, double delta,
                 std::vector<double> weights, std::vector<Table> tables,
                 std::size_t context_window)
    : LanguageModel(context_window),
      vocab_(std::move(vocab)),
      order_(order),
      delta_(delta),
      weights_(std::move(weights)),
      tables_(std::move(tables)) {
  if (order_ < 1) throw std::invalid_argument("invalid order");
  if (!(delta_ > 0.0) || !std::isfinite(delta_)) {
    throw std::invalid_argument("invalid smoothing");
  }
  if (weights_.empty()) weights_.assign(order_, 1.0 / order_);
  if (static_cast<int>(weights_.size()) != order_) {
    throw std::invalid_argument("interpolation weights must match order");
  }
  for (double w : weights_) {
    if (!(w >= 0.0)) throw std::invalid_argument("negative interpolation weight");
  }
  if (std::abs(std::accumulate(weights_.begin(), weights_.end(), 0.0) - 1.0) >
      1e-12) {
    throw std::invalid_argument("interpolation weights must sum to one");
  }
  tables_.resize(order_);
}

NGramLm NGramLm::train(Vocab vocab, std::span<const TokenSeq> corpus, int order,
                       double delta, std::vector<double> weights,
                       std::size_t context_window) {
  if (order < 1) throw std::invalid_argument("invalid order");
  if (corpus.empty()) throw std::invalid_argument("empty corpus");
  if (!(delta > 0.0)) throw std::invalid_argument("invalid smoothing");

  std::vector<Table> tables(order);
  TokenSeq padded;
  for (const auto& seq : corpus) {
    padded.assign(order - 1, Vocab::kBos);
    for (TokenId t : seq) {
      if (t < 0 || t >= vocab.size()) {
        throw std::invalid_argument("corpus token id out of range");
      }
      padded.push_back(t);
    }
    padded.push_back(Vocab::kEos);
    for (size_t i = order - 1; i < padded.size(); ++i) {
      for (int k = 0; k < order; ++k) {
        TokenSeq history(padded.begin() + (i - k), padded.begin() + i);
        Row& row = tables[k][history];
        ++row.total;
        ++row.next[padded[i]];
      }
    }
  }
  return NGramLm(std::move(vocab), order, delta, std::move(weights),
                 std::move(tables), context_window);
}

NGramLm NGramLm::uniform(Vocab vocab, double delta) {
  return NGramLm(std::move(vocab), 1, delta, {1.0}, {}, kDefaultContextWindow);
}

Logits NGramLm::logits_for_history(std::span<const TokenId> history) const {
  const Eigen::Index v = vocab_.size();
  TokenSeq padded;
  const size_t need = static_cast<size_t>(order_ - 1);
  if (history.size() < need) padded.assign(need - history.size(), Vocab::kBos);
  padded.insert(padded.end(), history.begin(), history.end());

  Eigen::VectorXd mixed = Eigen::VectorXd::Zero(v);
  Eigen::VectorXd level(v);
  for (int k = 0; k < order_; ++k) {
    if (weights_[k] == 0.0) continue;
    level.setConstant(delta_);
    double total = 0.0;
    TokenSeq key(padded.end() - k, padded.end());
    if (auto it = tables_[k].find(key); it != tables_[k].end()) {
      total = static_cast<double>(it->second.total);
      for (const auto& [tok, count] : it->second.next) {
        level(tok) += static_cast<double>(count);
      }
    }
    mixed += weights_[k] * level / (total + delta_ * static_cast<double>(v));
  }
  return Logits(mixed.array().log().matrix());
}

void NGramLm::save(std::ostream& out) const {
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "order " << order_ << '\n';
  out << "delta " << hex_double(delta_) << '\n';
  out << "weights";
  for (double w : weights_) out << ' ' << hex_double(w);
  out << '\n';
  out << "window " << context_window() << '\n';
  out << "vocab " << (vocab_.size() - Vocab::kNumReserved) << '\n';
  for (TokenId id = Vocab::kNumReserved; id < vocab_.size(); ++id) {
    out << text::escape_field(vocab_.token(id)) << '\n';
  }
  for (int k = 0; k < order_; ++k) {
    out << "table " << k << ' ' << tables_[k].size() << '\n';
    for (const auto& [history, row] : tables_[k]) {
      for (size_t i = 0; i < history.size(); ++i) {
        if (i) out << ' ';
        out << history[i];
      }
      out << '\t' << row.total << '\t';
      bool first = true;
      for (const auto& [tok, count] : row.next) {
        if (!first) out << ' ';
        first = false;
        out << tok << ':' << count;
      }
      out << '\n';
    }
  }
  out << "end\n";
}

NGramLm NGramLm::load(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) ||
      header != std::string(kMagic) + " " + std::to_string(kFormatVersion)) {
    throw FormatError("bad_model", "not a dialogkit n-gram model (v1)");
  }
  const int order = static_cast<int>(parse_u64(expect_key(in, "order")));
  const double delta = parse_double(expect_key(in, "delta"));
  std::vector<double> weights;
  for (const auto& w : text::split_whitespace(expect_key(in, "weights"))) {
    weights.push_back(parse_double(w));
  }
  const auto window = parse_u64(expect_key(in, "window"));
  const auto n_tokens = parse_u64(expect_key(in, "vocab"));
  std::vector<std::string> tokens;
  std::string line;
  for (std::uint64_t i = 0; i < n_tokens; ++i) {
    if (!std::getline(in, line)) {
      throw FormatError("bad_model", "model file truncated in vocab");
    }
    tokens.push_back(text::unescape_field(line));
  }
  Vocab vocab(tokens);
  if (order < 1) throw FormatError("bad_model", "order must be >= 1");

  std::vector<Table> tables(order);
  for (int k = 0; k < order; ++k) {
    const auto parts = text::split_whitespace(expect_key(in, "table"));
    if (parts.size() != 2 || parse_u64(parts[0]) != static_cast<unsigned>(k)) {
      throw FormatError("bad_model", "bad table header");
    }
    const auto rows = parse_u64(parts[1]);
    for (std::uint64_t r = 0; r < rows; ++r) {
      if (!std::getline(in, line)) {
        throw FormatError("bad_model", "model file truncated in table");
      }
      std::vector<std::string> cols;
      std::stringstream ss(line);
      std::string col;
      while (std::getline(ss, col, '\t')) cols.push_back(col);
      if (!line.empty() && line.back() == '\t') cols.emplace_back();
      if (cols.size() != 3) throw FormatError("bad_model", "bad table row");
      TokenSeq history;
      for (const auto& h : text::split_whitespace(cols[0])) {
        history.push_back(static_cast<TokenId>(parse_u64(h)));
      }
      if (static_cast<int>(history.size()) != k) {
        throw FormatError("bad_model", "history length does not match table");
      }
      Row row;
      row.total = parse_u64(cols[1]);
      for (const auto& entry : text::split_whitespace(cols[2])) {
        const auto colon = entry.find(':');
        if (colon == std::string::npos) {
          throw FormatError("bad_model", "bad count entry");
        }
        const auto tok = static_cast<TokenId>(parse_u64(entry.substr(0, colon)));
        if (tok >= vocab.size()) {
          throw FormatError("bad_model", "token id out of range");
        }
        row.next[tok] = parse_u64(entry.substr(colon + 1));
      }
      tables[k].emplace(std::move(history), std::move(row));
    }
  }
  if (!std::getline(in, line) || line != "end") {
    throw FormatError("bad_model", "missing end marker");
  }
  try {
    return NGramLm(std::move(vocab), order, delta, std::move(weights),
                   std::move(tables), window);
  } catch (const std::invalid_argument& e) {
    throw FormatError("bad_model", e.what());
  }
}

void NGramLm::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw FormatError("io", "cannot write " + path);
  save(out);
}

NGramLm NGramLm::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("io", "cannot open " + path);
  return load(in);
}

}  // namespace dialogkit
