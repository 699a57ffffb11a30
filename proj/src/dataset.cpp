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

#include "dialogkit/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>

#include "dialogkit/text.hpp"

namespace dialogkit {

namespace {

constexpr std::string_view kSepJoin = " <sep> ";

const std::vector<std::string> kNoChildren;

}  // namespace

const std::vector<std::string>& MessageTree::children(const std::string& id) const {
  auto it = children_.find(id);
  return it == children_.end() ? kNoChildren : it->second;
}

std::vector<std::string> MessageTree::dfs_order() const {
  std::vector<std::string> order;
  std::vector<std::string> stack{root_};
  while (!stack.empty()) {
    std::string id = std::move(stack.back());
    stack.pop_back();
    const auto& kids = children(id);
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
    order.push_back(std::move(id));
  }
  return order;
}

std::vector<MessageTree> build_forest(std::vector<Message> messages) {
  std::map<std::string, Message> by_id;
  for (auto& m : messages) {
    if (m.parent_id && m.parent_id->empty()) m.parent_id.reset();
    const std::string id = m.id;
    if (!by_id.emplace(id, std::move(m)).second) {
      throw FormatError("duplicate_id", "duplicate message id '" + id + "'");
    }
  }
  for (const auto& [id, m] : by_id) {
    if (m.parent_id && !by_id.count(*m.parent_id)) {
      throw FormatError("missing_parent", "message '" + id + "' has unknown parent '" +
                                              *m.parent_id + "'");
    }
  }
  // Resolve each message's root; a walk that revisits a node is a cycle.
  std::map<std::string, std::string> root_of;
  for (const auto& [id, m] : by_id) {
    std::vector<std::string> path;
    std::set<std::string> on_path;
    std::string cur = id;
    std::string root;
    while (true) {
      if (auto it = root_of.find(cur); it != root_of.end()) {
        root = it->second;
        break;
      }
      if (!on_path.insert(cur).second) {
        throw FormatError("cycle", "parent links of '" + cur + "' form a cycle");
      }
      path.push_back(cur);
      const Message& cm = by_id.at(cur);
      if (!cm.parent_id) {
        root = cur;
        break;
      }
      cur = *cm.parent_id;
    }
    for (const auto& p : path) root_of[p] = root;
  }
  std::map<std::string, MessageTree> trees;
  for (auto& [id, m] : by_id) {
    MessageTree& t = trees[root_of.at(id)];
    t.root_ = root_of.at(id);
    if (m.parent_id) t.children_[*m.parent_id].push_back(id);
    t.messages_.emplace(id, std::move(m));
  }
  std::vector<MessageTree> out;
  for (auto& [root, t] : trees) {
    for (auto& [_, kids] : t.children_) std::sort(kids.begin(), kids.end());
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Message> read_messages(std::istream& in) {
  std::vector<Message> out;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = text::split_record(line);
    if (f.size() != 4 || f[0].empty()) {
      throw FormatError("bad_record", "line " + std::to_string(lineno) +
                                          ": expected id, parent_id, author, text");
    }
    Message m;
    m.id = std::move(f[0]);
    if (!f[1].empty()) m.parent_id = std::move(f[1]);
    m.author = std::move(f[2]);
    m.text = std::move(f[3]);
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<Message> read_messages_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("io", "cannot open " + path);
  return read_messages(in);
}

void FilterConfig::validate() const {
  if (min_subwords < 1 || max_subwords < min_subwords) {
    throw std::invalid_argument("invalid subword bounds");
  }
  if (!(min_alpha_fraction >= 0.0 && min_alpha_fraction <= 1.0)) {
    throw std::invalid_argument("min_alpha_fraction must be in [0, 1]");
  }
  if (max_global_repeats < 1) throw std::invalid_argument("max_global_repeats must be >= 1");
  if (!(parent_overlap_threshold > 0.0 && parent_overlap_threshold <= 1.0)) {
    throw std::invalid_argument("parent_overlap_threshold must be in (0, 1]");
  }
  if (overlap_ngram_order < 1) throw std::invalid_argument("overlap_ngram_order must be >= 1");
}

std::string rule_name(Rule r) {
  switch (r) {
    case Rule::kSubwordCount: return "subword-count";
    case Rule::kAlphaFraction: return "alpha-fraction";
    case Rule::kUrl: return "url";
    case Rule::kBotAuthor: return "bot-author";
    case Rule::kGlobalRepeat: return "global-repeat";
    case Rule::kParentOverlap: return "parent-overlap";
    case Rule::kSafety: return "safety";
  }
  return "unknown";
}

std::string strip_parent_quote(std::string_view msg_text, std::string_view parent_text) {
  std::string msg = text::normalize_whitespace(msg_text);
  const std::string parent = text::normalize_whitespace(parent_text);
  if (parent.empty()) return msg;
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t hit = msg.find(parent, pos);
    if (hit == std::string::npos) break;
    out.append(msg, pos, hit - pos);
    out += ' ';
    pos = hit + parent.size();
  }
  out.append(msg, pos, std::string::npos);
  return text::normalize_whitespace(out);
}

namespace {

std::set<std::vector<std::string>> ngrams(std::string_view s, int n) {
  const auto toks = text::split_whitespace(text::to_lower_ascii(s));
  std::set<std::vector<std::string>> out;
  const auto un = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + un <= toks.size(); ++i) {
    out.emplace(toks.begin() + i, toks.begin() + i + un);
  }
  return out;
}

}  // namespace

double ngram_overlap(std::string_view a, std::string_view b, int n) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  const auto ga = ngrams(a, n);
  if (ga.empty()) return 0.0;
  const auto gb = ngrams(b, n);
  std::size_t shared = 0;
  for (const auto& g : ga) shared += gb.count(g);
  return static_cast<double>(shared) / static_cast<double>(ga.size());
}

double alpha_fraction(std::string_view s) {
  std::size_t letters = 0, total = 0;
  for (char32_t cp : text::utf8_decode(s)) {
    if (text::is_space(cp)) continue;
    ++total;
    if (text::is_alphabetic(cp)) ++letters;
  }
  return total == 0 ? 0.0 : static_cast<double>(letters) / static_cast<double>(total);
}

bool contains_url(std::string_view s) {
  const std::string lower = text::to_lower_ascii(s);
  for (const char* marker : {"http://", "https://", "www."}) {
    if (lower.find(marker) != std::string::npos) return true;
  }
  return false;
}

bool is_bot_author(std::string_view author, BotMatch mode) {
  const std::string lower = text::to_lower_ascii(author);
  if (mode == BotMatch::kSubstring) return lower.find("bot") != std::string::npos;
  const auto is_word = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
  };
  for (std::size_t pos = lower.find("bot"); pos != std::string::npos;
       pos = lower.find("bot", pos + 1)) {
    const bool left = pos == 0 || !is_word(lower[pos - 1]);
    const bool right = pos + 3 == lower.size() || !is_word(lower[pos + 3]);
    if (left && right) return true;
  }
  return false;
}

std::optional<Rule> message_passes_filters(const Message& msg, const Message* parent,
                                           long long global_count,
                                           const FilterConfig& cfg,
                                           const Tokenizer& tokenizer) {
  const auto n = static_cast<long long>(tokenizer.encode(msg.text).size());
  if (n < cfg.min_subwords || n > cfg.max_subwords) return Rule::kSubwordCount;
  if (alpha_fraction(msg.text) < cfg.min_alpha_fraction) return Rule::kAlphaFraction;
  if (contains_url(msg.text)) return Rule::kUrl;
  if (is_bot_author(msg.author, cfg.bot_match)) return Rule::kBotAuthor;
  if (global_count > cfg.max_global_repeats) return Rule::kGlobalRepeat;
  if (parent && ngram_overlap(msg.text, parent->text, cfg.overlap_ngram_order) >=
                    cfg.parent_overlap_threshold) {
    return Rule::kParentOverlap;
  }
  if (cfg.unsafe && cfg.unsafe(msg.text)) return Rule::kSafety;
  return std::nullopt;
}

GlobalCounts corpus_pass1(std::span<const MessageTree> trees) {
  GlobalCounts counts;
  for (const auto& t : trees) {
    for (const auto& id : t.dfs_order()) ++counts[t.message(id).text];
  }
  return counts;
}

ExtractResult extract_pairs(const MessageTree& tree, const FilterConfig& cfg,
                            const Tokenizer& tokenizer, const GlobalCounts& counts) {
  cfg.validate();
  ExtractResult out;
  // Each frame: message id, and the stripped messages on its path.
  struct Frame {
    std::string id;
    std::size_t depth;
  };
  std::vector<Message> path;  // stripped survivors from the root down
  std::vector<Frame> stack{{tree.root(), 0}};
  std::function<std::size_t(const std::string&)> subtree_size =
      [&](const std::string& id) {
        std::size_t n = 0;
        for (const auto& c : tree.children(id)) n += 1 + subtree_size(c);
        return n;
      };
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    path.resize(f.depth);
    Message m = tree.message(f.id);
    const Message* parent = path.empty() ? nullptr : &path.back();
    if (parent) m.text = strip_parent_quote(m.text, parent->text);
    const auto it = counts.find(tree.message(f.id).text);
    const long long global = it == counts.end() ? 0 : it->second;
    if (auto rule = message_passes_filters(m, parent, global, cfg, tokenizer)) {
      out.removals.push_back({m.id, *rule});
      out.cascaded += subtree_size(f.id);
      continue;
    }
    if (parent) {
      TrainingPair p;
      const std::size_t first =
          path.size() > kMaxContextTurns ? path.size() - kMaxContextTurns : 0;
      for (std::size_t i = first; i < path.size(); ++i) p.context.push_back(path[i].text);
      p.response = m.text;
      out.pairs.push_back(std::move(p));
    }
    path.push_back(std::move(m));
    const auto& kids = tree.children(f.id);
    for (auto k = kids.rbegin(); k != kids.rend(); ++k) stack.push_back({*k, f.depth + 1});
  }
  return out;
}

MineResult mine(std::span<const MessageTree> trees, const FilterConfig& cfg,
                const Tokenizer& tokenizer) {
  MineResult out;
  const GlobalCounts counts = corpus_pass1(trees);
  for (const auto& t : trees) {
    ExtractResult r = extract_pairs(t, cfg, tokenizer, counts);
    out.summary.trees += 1;
    out.summary.messages += t.size();
    out.summary.cascaded += r.cascaded;
    for (auto& rem : r.removals) {
      out.summary.removed_by_rule[static_cast<int>(rem.rule) - 1] += 1;
      out.removals.push_back(std::move(rem));
    }
    for (auto& p : r.pairs) out.pairs.push_back(std::move(p));
  }
  out.summary.pairs = out.pairs.size();
  return out;
}

std::string format_pair(const TrainingPair& p) {
  return text::join_record({text::join(p.context, kSepJoin), p.response});
}

TrainingPair parse_pair(std::string_view line) {
  const auto f = text::split_record(line);
  if (f.size() != 2) throw FormatError("bad_record", "pair line needs context and response");
  TrainingPair p;
  p.response = f[1];
  std::size_t pos = 0;
  while (true) {
    const std::size_t hit = f[0].find(kSepJoin, pos);
    p.context.push_back(f[0].substr(pos, hit - pos));
    if (hit == std::string::npos) break;
    pos = hit + kSepJoin.size();
  }
  return p;
}

void write_pairs(std::ostream& out, std::span<const TrainingPair> pairs) {
  for (const auto& p : pairs) out << format_pair(p) << '\n';
}

void write_removals(std::ostream& out, std::span<const RemovalRecord> removals) {
  for (const auto& r : removals) {
    out << text::escape_field(r.id) << '\t' << static_cast<int>(r.rule) << '\n';
  }
}

void write_summary(std::ostream& out, const MineSummary& s) {
  out << "trees\t" << s.trees << '\n'
      << "messages\t" << s.messages << '\n'
      << "pairs\t" << s.pairs << '\n'
      << "cascaded\t" << s.cascaded << '\n';
  for (int r = 1; r <= kNumRules; ++r) {
    out << "rule" << r << '\t' << rule_name(static_cast<Rule>(r)) << '\t'
        << s.removed_by_rule[r - 1] << '\n';
  }
}

}  // namespace dialogkit
