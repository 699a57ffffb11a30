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

#include "dialogkit/evalharness.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "dialogkit/rng.hpp"
#include "dialogkit/text.hpp"

namespace dialogkit {

TokenSeq encode_context(const Vocab& vocab, const Tokenizer& tokenizer,
                        std::span<const std::string> history) {
  const std::size_t first =
      history.size() > kContextTurns ? history.size() - kContextTurns : 0;
  TokenSeq out;
  for (std::size_t i = first; i < history.size(); ++i) {
    for (const auto& piece : tokenizer.encode(history[i])) out.push_back(vocab.id(piece));
    out.push_back(Vocab::kSep);
  }
  return out;
}

TokenSeq training_sequence(const Vocab& vocab, const Tokenizer& tokenizer,
                           const TrainingPair& pair) {
  TokenSeq out = encode_context(vocab, tokenizer, pair.context);
  for (const auto& piece : tokenizer.encode(pair.response)) out.push_back(vocab.id(piece));
  return out;
}

std::string detokenize(const Vocab& vocab, const Tokenizer& tokenizer,
                       std::span<const TokenId> tokens) {
  std::vector<std::string> pieces;
  for (TokenId t : tokens) {
    if (vocab.is_reserved(t) && t != Vocab::kUnk) continue;
    pieces.push_back(vocab.token(t));
  }
  return tokenizer.decode(pieces);
}

bool is_question(std::string_view turn) {
  std::size_t end = turn.size();
  while (end > 0) {
    const char c = turn[end - 1];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '!' || c == '.' ||
        c == '"' || c == '\'') {
      --end;
      continue;
    }
    // Typographic closing quotes.
    if (end >= 3 && turn.substr(end - 3, 2) == "\xE2\x80" &&
        (turn[end - 1] == '\x9D' || turn[end - 1] == '\x99')) {
      end -= 3;
      continue;
    }
    break;
  }
  return end > 0 && turn[end - 1] == '?';
}

std::string generic_bot_reply(std::span<const std::string> history) {
  if (history.empty()) throw std::invalid_argument("empty history");
  return is_question(history.back()) ? "I don't know" : "ok";
}

BotReply GenericBot::reply(std::span<const std::string> history, std::uint64_t) const {
  return {generic_bot_reply(history), std::nullopt};
}

BotReply lm_bot_reply(const LanguageModel& model, const Tokenizer& tokenizer,
                      std::span<const std::string> history, DecodingConfig decoding,
                      const RepetitionConfig& repetition, std::uint64_t seed) {
  decoding.seed = seed;
  const Vocab& vocab = model.vocab();
  const TokenSeq context = encode_context(vocab, tokenizer, history);
  const std::vector<Candidate> ranked = sample_and_rank(model, context, decoding);

  ReplyDiagnostics diag;
  diag.seed = seed;
  std::vector<std::string> texts;
  for (const auto& c : ranked) {
    texts.push_back(detokenize(vocab, tokenizer, c.tokens));
    diag.candidates.push_back(
        {texts.back(), c.token_count, c.logprob_sum, c.score, c.finished(), std::nullopt});
  }
  const FilterResult filtered = filter_candidates(history, texts, repetition);
  for (const auto& r : filtered.removed) diag.candidates[r.candidate].repeats_turn = r.turn;
  diag.chosen = filtered.kept.front();
  diag.forced = filtered.forced;
  return {texts[diag.chosen], std::move(diag)};
}

LmBot::LmBot(std::shared_ptr<const LanguageModel> model,
             std::shared_ptr<const Tokenizer> tokenizer, DecodingConfig decoding,
             RepetitionConfig repetition)
    : model_(std::move(model)),
      tokenizer_(std::move(tokenizer)),
      decoding_(decoding),
      repetition_(repetition) {
  if (!model_ || !tokenizer_) throw std::invalid_argument("LmBot needs a model and tokenizer");
  decoding_.validate();
  repetition_.validate();
}

BotReply LmBot::reply(std::span<const std::string> history, std::uint64_t seed) const {
  return lm_bot_reply(*model_, *tokenizer_, history, decoding_, repetition_, seed);
}

std::vector<MtbContext> read_mtb(std::istream& in) {
  std::vector<MtbContext> out;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto turns = text::split_record(line);
    if (turns.size() > static_cast<std::size_t>(kMaxMtbTurns)) {
      throw FormatError("bad_record", "line " + std::to_string(lineno) + ": " +
                                          std::to_string(turns.size()) +
                                          " turns, at most 3 allowed");
    }
    out.push_back({std::move(turns)});
  }
  return out;
}

std::vector<MtbContext> read_mtb_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("io", "cannot open " + path);
  return read_mtb(in);
}

std::array<std::size_t, kMaxMtbTurns> mtb_turn_histogram(
    std::span<const MtbContext> contexts) {
  std::array<std::size_t, kMaxMtbTurns> h{};
  for (const auto& c : contexts) {
    if (c.turns.empty() || c.turns.size() > static_cast<std::size_t>(kMaxMtbTurns)) {
      throw std::invalid_argument("context must have 1 to 3 turns");
    }
    ++h[c.turns.size() - 1];
  }
  return h;
}

std::vector<StaticResponse> run_static_eval(const Bot& bot,
                                            std::span<const MtbContext> contexts,
                                            std::uint64_t seed) {
  std::vector<StaticResponse> out;
  out.reserve(contexts.size());
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    try {
      out.push_back({contexts[i], bot.reply(contexts[i].turns, Rng::derive(seed, i)).text});
    } catch (const std::exception& e) {
      throw std::runtime_error("context " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

void write_static_responses(std::ostream& out, std::span<const StaticResponse> responses) {
  for (const auto& r : responses) {
    out << format_pair(TrainingPair{r.context.turns, r.response}) << '\n';
  }
}

std::string to_string(Speaker s) { return s == Speaker::kBot ? "bot" : "user"; }

std::string to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::kActive: return "active";
    case SessionStatus::kComplete: return "complete";
    case SessionStatus::kAbandoned: return "abandoned";
  }
  return "unknown";
}

std::string ProtocolError::reason() const {
  if (code_ == reason::kProtocolViolation) return "protocol violation";
  if (code_ == reason::kSessionTooShort) return "session too short";
  if (code_ == reason::kSessionTooLong) return "session too long";
  if (code_ == reason::kUnlabeledBotTurns) return "unlabeled bot turns";
  if (code_ == reason::kNotABotTurn) return "not a bot turn";
  if (code_ == reason::kSessionClosed) return "session closed";
  if (code_ == reason::kOpenerNotLabelable) return "opener not labelable";
  return code_;
}

Speaker SessionRecord::next_speaker() const {
  return turns.size() % 2 == 0 ? Speaker::kBot : Speaker::kUser;
}

std::vector<int> SessionRecord::unlabeled_bot_turns() const {
  std::vector<int> out;
  for (int i = 2; i < size(); i += 2) {
    auto it = labels.find(i);
    if (it == labels.end() || it->second.empty()) out.push_back(i);
  }
  return out;
}

bool SessionRecord::can_finish() const {
  return status == SessionStatus::kActive && size() >= kMinSessionTurns &&
         size() <= kMaxSessionTurns && unlabeled_bot_turns().empty();
}

SessionRecord start_session(const event::Create& create) {
  SessionRecord r;
  r.id = create.id;
  r.model = create.model;
  r.seed = create.seed;
  r.config = create.config;
  r.turns.push_back({Speaker::kBot, std::string(kOpener)});
  return r;
}

namespace {

void require_active(const SessionRecord& r) {
  if (r.status != SessionStatus::kActive) {
    throw ProtocolError(reason::kSessionClosed,
                        "session " + r.id + " is " + to_string(r.status));
  }
}

void add_turn(SessionRecord& r, Speaker who, const std::string& text) {
  require_active(r);
  if (r.size() >= kMaxSessionTurns) {
    throw ProtocolError(reason::kSessionTooLong,
                        "session already has " + std::to_string(kMaxSessionTurns) +
                            " turns; only finish is allowed");
  }
  if (r.next_speaker() != who) {
    throw ProtocolError(reason::kProtocolViolation,
                        "expected a " + to_string(r.next_speaker()) + " turn");
  }
  r.turns.push_back({who, text});
}

}  // namespace

void session_step(SessionRecord& r, const SessionEvent& ev) {
  std::visit(
      [&](const auto& e) {
        using E = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<E, event::Create>) {
          throw ProtocolError(reason::kProtocolViolation, "session already exists");
        } else if constexpr (std::is_same_v<E, event::UserTurn>) {
          add_turn(r, Speaker::kUser, e.text);
        } else if constexpr (std::is_same_v<E, event::BotTurn>) {
          add_turn(r, Speaker::kBot, e.text);
        } else if constexpr (std::is_same_v<E, event::Label>) {
          if (e.turn == 0) {
            throw ProtocolError(reason::kOpenerNotLabelable, "the opener is not labelled");
          }
          if (e.turn < 0 || e.turn >= r.size() || r.turns[e.turn].speaker != Speaker::kBot) {
            throw ProtocolError(reason::kNotABotTurn,
                                "turn " + std::to_string(e.turn) + " is not a bot turn");
          }
          if (e.worker.empty()) {
            throw ProtocolError(reason::kProtocolViolation, "label needs a worker id");
          }
          r.labels[e.turn][e.worker] = WorkerLabel{e.sensible, e.sensible && e.specific};
        } else if constexpr (std::is_same_v<E, event::Finish>) {
          require_active(r);
          if (r.size() < kMinSessionTurns) {
            throw ProtocolError(reason::kSessionTooShort,
                                "session has " + std::to_string(r.size()) +
                                    " turns; at least " +
                                    std::to_string(kMinSessionTurns) + " are required");
          }
          const auto missing = r.unlabeled_bot_turns();
          if (!missing.empty()) {
            std::string list;
            for (int t : missing) list += (list.empty() ? "" : ",") + std::to_string(t);
            throw ProtocolError(reason::kUnlabeledBotTurns, "unlabelled bot turns: " + list);
          }
          r.status = SessionStatus::kComplete;
        } else if constexpr (std::is_same_v<E, event::Abandon>) {
          require_active(r);
          r.status = SessionStatus::kAbandoned;
        }
      },
      ev);
}

SessionRecord replay_session(std::span<const SessionEvent> events) {
  if (events.empty() || !std::holds_alternative<event::Create>(events.front())) {
    throw ProtocolError(reason::kProtocolViolation, "replay must start with create");
  }
  SessionRecord r = start_session(std::get<event::Create>(events.front()));
  for (const auto& e : events.subspan(1)) session_step(r, e);
  return r;
}

std::vector<std::string> validate_session(const SessionRecord& r) {
  std::vector<std::string> v;
  if (r.turns.empty() || r.turns[0].speaker != Speaker::kBot || r.turns[0].text != kOpener) {
    v.push_back("turn 0 is not the bot opener");
  }
  for (int i = 0; i < r.size(); ++i) {
    const Speaker expected = i % 2 == 0 ? Speaker::kBot : Speaker::kUser;
    if (r.turns[i].speaker != expected) {
      v.push_back("turn " + std::to_string(i) + " breaks alternation");
    }
  }
  if (r.size() > kMaxSessionTurns) v.push_back("more than 28 turns");
  if (r.status == SessionStatus::kComplete) {
    if (r.size() < kMinSessionTurns) v.push_back("complete with fewer than 14 turns");
    if (!r.unlabeled_bot_turns().empty()) v.push_back("complete with unlabelled bot turns");
  }
  for (const auto& [turn, by_worker] : r.labels) {
    if (turn <= 0 || turn >= r.size() || r.turns[turn].speaker != Speaker::kBot) {
      v.push_back("label on non-bot turn " + std::to_string(turn));
    }
    for (const auto& [w, l] : by_worker) {
      if (l.specific && !l.sensible) v.push_back("specific without sensible from " + w);
    }
  }
  return v;
}

std::vector<TurnLabels> session_turn_labels(const SessionRecord& r) {
  std::vector<TurnLabels> out;
  for (const auto& [turn, by_worker] : r.labels) {
    if (by_worker.empty()) continue;
    std::vector<bool> s, p;
    for (const auto& [_, l] : by_worker) {
      s.push_back(l.sensible);
      p.push_back(l.specific);
    }
    out.emplace_back(std::move(s), std::move(p));
  }
  return out;
}

std::vector<std::string> session_history(const SessionRecord& r) {
  std::vector<std::string> out;
  for (const auto& t : r.turns) out.push_back(t.text);
  return out;
}

}  // namespace dialogkit
