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

#include "dialogkit/tokenizer.hpp"

#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "dialogkit/text.hpp"

namespace dialogkit {

namespace {

constexpr std::string_view kMagic = "dialogkit-bpe 1";

using Symbols = std::vector<std::string>;

// Merges every left-to-right, non-overlapping occurrence of (l, r).
void apply_merge(Symbols& s, const std::string& l, const std::string& r) {
  Symbols out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (i + 1 < s.size() && s[i] == l && s[i + 1] == r) {
      out.push_back(l + r);
      i += 2;
    } else {
      out.push_back(std::move(s[i]));
      ++i;
    }
  }
  s = std::move(out);
}

}  // namespace

std::vector<std::string> WhitespaceTokenizer::encode(std::string_view text) const {
  return text::split_whitespace(text);
}

std::string WhitespaceTokenizer::decode(std::span<const std::string> pieces) const {
  return text::join(std::vector<std::string>(pieces.begin(), pieces.end()), " ");
}

std::vector<std::string> bpe_segments(std::string_view text) {
  std::vector<std::string> out;
  for (auto& ch : text::utf8_chars(text)) {
    if (out.empty() || ch == " ") out.emplace_back();
    out.back() += ch;
  }
  return out;
}

BpeModel BpeModel::train(std::span<const std::string> corpus, int vocab_size) {
  std::map<std::string, long long> segment_freq;
  std::set<std::string> inventory;
  for (const auto& line : corpus) {
    for (auto& seg : bpe_segments(line)) {
      for (auto& ch : text::utf8_chars(seg)) inventory.insert(ch);
      ++segment_freq[seg];
    }
  }
  if (vocab_size < static_cast<int>(inventory.size())) {
    throw std::invalid_argument("vocab_size " + std::to_string(vocab_size) +
                                " is below the character inventory (" +
                                std::to_string(inventory.size()) + ")");
  }
  std::vector<std::pair<Symbols, long long>> words;
  for (auto& [seg, n] : segment_freq) words.emplace_back(text::utf8_chars(seg), n);

  std::vector<Merge> merges;
  std::set<std::string> pieces(inventory.begin(), inventory.end());
  while (static_cast<int>(pieces.size()) < vocab_size) {
    std::map<Merge, long long> counts;
    for (const auto& [sym, n] : words) {
      for (std::size_t i = 0; i + 1 < sym.size(); ++i) counts[{sym[i], sym[i + 1]}] += n;
    }
    const Merge* best = nullptr;
    long long best_n = 1;
    for (const auto& [pair, n] : counts) {  // map order = lexicographic
      if (n > best_n) {
        best = &pair;
        best_n = n;
      }
    }
    if (!best) break;
    const Merge m = *best;
    for (auto& [sym, n] : words) apply_merge(sym, m.first, m.second);
    pieces.insert(m.first + m.second);
    merges.push_back(m);
  }
  return BpeModel(Symbols(inventory.begin(), inventory.end()), std::move(merges),
                  vocab_size);
}

BpeModel::BpeModel(std::vector<std::string> chars, std::vector<Merge> merges,
                   int vocab_size)
    : chars_(std::move(chars)), merges_(std::move(merges)), vocab_size_(vocab_size) {
  char_set_.insert(chars_.begin(), chars_.end());
  if (char_set_.size() != chars_.size()) {
    throw std::invalid_argument("duplicate character in BPE inventory");
  }
  for (std::size_t i = 0; i < merges_.size(); ++i) rank_.emplace(merges_[i], i);
}

std::vector<std::string> BpeModel::encode(std::string_view text) const {
  std::vector<std::string> out;
  for (const auto& seg : bpe_segments(text)) {
    Symbols sym = text::utf8_chars(seg);
    for (auto& s : sym) {
      if (!char_set_.count(s)) s = std::string(kUnkPiece);
    }
    // Repeatedly apply the earliest-learned merge present in the segment.
    while (sym.size() > 1) {
      std::size_t best = std::numeric_limits<std::size_t>::max();
      for (std::size_t i = 0; i + 1 < sym.size(); ++i) {
        auto it = rank_.find({sym[i], sym[i + 1]});
        if (it != rank_.end() && it->second < best) best = it->second;
      }
      if (best == std::numeric_limits<std::size_t>::max()) break;
      apply_merge(sym, merges_[best].first, merges_[best].second);
    }
    for (auto& s : sym) out.push_back(std::move(s));
  }
  return out;
}

std::string BpeModel::decode(std::span<const std::string> pieces) const {
  std::string out;
  for (const auto& p : pieces) out += p == kUnkPiece ? "\xEF\xBF\xBD" : p;
  return out;
}

std::vector<std::string> BpeModel::vocabulary() const {
  std::vector<std::string> v(chars_);
  std::set<std::string> seen(chars_.begin(), chars_.end());
  for (const auto& [l, r] : merges_) {
    if (seen.insert(l + r).second) v.push_back(l + r);
  }
  v.emplace_back(kUnkPiece);
  return v;
}

void BpeModel::save(std::ostream& out) const {
  out << kMagic << '\n' << vocab_size_ << '\t' << chars_.size() << '\t'
      << merges_.size() << '\n';
  for (const auto& c : chars_) out << text::escape_field(c) << '\n';
  for (const auto& [l, r] : merges_) out << text::join_record({l, r}) << '\n';
  out << "end\n";
}

void BpeModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw FormatError("io", "cannot write " + path);
  save(out);
}

BpeModel BpeModel::load(std::istream& in) {
  std::string line;
  auto next = [&](const char* what) {
    if (!std::getline(in, line)) {
      throw FormatError("bpe_format", std::string("truncated BPE model: missing ") + what);
    }
    return line;
  };
  if (next("header") != kMagic) throw FormatError("bpe_format", "not a BPE model");
  const auto counts = text::split_record(next("sizes"));
  if (counts.size() != 3) throw FormatError("bpe_format", "bad BPE size line");
  int vocab_size = 0;
  std::size_t n_chars = 0, n_merges = 0;
  try {
    vocab_size = std::stoi(counts[0]);
    n_chars = std::stoul(counts[1]);
    n_merges = std::stoul(counts[2]);
  } catch (const std::exception&) {
    throw FormatError("bpe_format", "bad BPE size line");
  }
  std::vector<std::string> chars;
  for (std::size_t i = 0; i < n_chars; ++i) chars.push_back(text::unescape_field(next("char")));
  std::vector<Merge> merges;
  for (std::size_t i = 0; i < n_merges; ++i) {
    const auto f = text::split_record(next("merge"));
    if (f.size() != 2) throw FormatError("bpe_format", "bad merge line");
    merges.emplace_back(f[0], f[1]);
  }
  if (next("end marker") != "end") throw FormatError("bpe_format", "missing end marker");
  try {
    return BpeModel(std::move(chars), std::move(merges), vocab_size);
  } catch (const std::invalid_argument& e) {
    throw FormatError("bpe_format", e.what());
  }
}

BpeModel BpeModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("io", "cannot open " + path);
  return load(in);
}

std::unique_ptr<Tokenizer> load_tokenizer(const std::string& spec) {
  if (spec == "whitespace") return std::make_unique<WhitespaceTokenizer>();
  return std::make_unique<BpeModel>(BpeModel::load(spec));
}

}  // namespace dialogkit
