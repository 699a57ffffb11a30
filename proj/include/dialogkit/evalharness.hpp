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

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dialogkit/dataset.hpp"
#include "dialogkit/decoding.hpp"
#include "dialogkit/lm.hpp"
#include "dialogkit/metrics.hpp"
#include "dialogkit/repetition.hpp"
#include "dialogkit/tokenizer.hpp"

namespace dialogkit {

// ---------------------------------------------------------------------------
// Dialog encoding shared by training and generation.

/// Turns a model sees as context before a response.
constexpr int kContextTurns = 7;

/// Encodes each turn with `tokenizer`, maps pieces to ids (UNK when absent)
/// and follows every turn with SEP. Only the last kContextTurns turns are
/// used.
TokenSeq encode_context(const Vocab& vocab, const Tokenizer& tokenizer,
                        std::span<const std::string> history);

/// encode_context(pair.context) followed by the response pieces. EOS is
/// left to the model.
TokenSeq training_sequence(const Vocab& vocab, const Tokenizer& tokenizer,
                           const TrainingPair& pair);

/// Drops reserved ids other than UNK, maps the rest to pieces and lets the
/// tokenizer join them.
std::string detokenize(const Vocab& vocab, const Tokenizer& tokenizer,
                       std::span<const TokenId> tokens);

// ---------------------------------------------------------------------------
// Bots.

struct CandidateDiagnostic {
  std::string text;
  int token_count = 0;
  double logprob_sum = 0.0;
  double score = 0.0;
  bool finished = false;
  std::optional<std::size_t> repeats_turn;  ///< set when filtered out
};

struct ReplyDiagnostics {
  std::uint64_t seed = 0;
  std::vector<CandidateDiagnostic> candidates;  ///< ranked, best first
  std::size_t chosen = 0;                       ///< index into candidates
  bool forced = false;
};

struct BotReply {
  std::string text;
  std::optional<ReplyDiagnostics> diagnostics;
};

class Bot {
 public:
  virtual ~Bot() = default;
  /// `history` ends with the user's turn. Deterministic in (history, seed).
  virtual BotReply reply(std::span<const std::string> history,
                         std::uint64_t seed) const = 0;
};

/// "I don't know" for questions, "ok" otherwise. A question is a turn that
/// ends in '?' once trailing whitespace, '!', '.' and quote marks are gone.
std::string generic_bot_reply(std::span<const std::string> history);
bool is_question(std::string_view turn);

class GenericBot final : public Bot {
 public:
  BotReply reply(std::span<const std::string> history,
                 std::uint64_t seed) const override;
};

/// sample_and_rank over the encoded history, then the cross-turn repetition
/// filter; the first surviving candidate is the reply.
BotReply lm_bot_reply(const LanguageModel& model, const Tokenizer& tokenizer,
                      std::span<const std::string> history,
                      DecodingConfig decoding, const RepetitionConfig& repetition,
                      std::uint64_t seed);

class LmBot final : public Bot {
 public:
  LmBot(std::shared_ptr<const LanguageModel> model,
        std::shared_ptr<const Tokenizer> tokenizer, DecodingConfig decoding,
        RepetitionConfig repetition);
  BotReply reply(std::span<const std::string> history,
                 std::uint64_t seed) const override;

  const DecodingConfig& decoding() const { return decoding_; }
  const RepetitionConfig& repetition() const { return repetition_; }

 private:
  std::shared_ptr<const LanguageModel> model_;
  std::shared_ptr<const Tokenizer> tokenizer_;
  DecodingConfig decoding_;
  RepetitionConfig repetition_;
};

// ---------------------------------------------------------------------------
// Static evaluation.

/// One to three turns, oldest first, the last one the user's.
struct MtbContext {
  std::vector<std::string> turns;
};

constexpr int kMaxMtbTurns = 3;

/// One context per line, turns as tab-separated escaped fields. Throws
/// FormatError("bad_record") for lines with 0 or more than 3 turns.
std::vector<MtbContext> read_mtb(std::istream& in);
std::vector<MtbContext> read_mtb_file(const std::string& path);

/// Number of contexts with 1, 2 and 3 turns.
std::array<std::size_t, kMaxMtbTurns> mtb_turn_histogram(
    std::span<const MtbContext> contexts);

struct StaticResponse {
  MtbContext context;
  std::string response;
};

/// Context i is answered with seed Rng::derive(seed, i). A bot failure
/// is rethrown as std::runtime_error naming the context index.
std::vector<StaticResponse> run_static_eval(const Bot& bot,
                                            std::span<const MtbContext> contexts,
                                            std::uint64_t seed = 0);

/// Same record layout as mined pairs: context joined by " <sep> ", tab,
/// response.
void write_static_responses(std::ostream& out,
                            std::span<const StaticResponse> responses);

// ---------------------------------------------------------------------------
// Interactive sessions.

inline constexpr std::string_view kOpener = "Hi!";
constexpr int kMinSessionTurns = 14;
constexpr int kMaxSessionTurns = 28;

enum class Speaker { kBot, kUser };
enum class SessionStatus { kActive, kComplete, kAbandoned };

std::string to_string(Speaker s);
std::string to_string(SessionStatus s);

/// Reason codes carried by ProtocolError.
namespace reason {
inline constexpr std::string_view kProtocolViolation = "protocol_violation";
inline constexpr std::string_view kSessionTooShort = "session_too_short";
inline constexpr std::string_view kSessionTooLong = "session_too_long";
inline constexpr std::string_view kUnlabeledBotTurns = "unlabeled_bot_turns";
inline constexpr std::string_view kNotABotTurn = "not_a_bot_turn";
inline constexpr std::string_view kSessionClosed = "session_closed";
inline constexpr std::string_view kOpenerNotLabelable = "opener_not_labelable";
}  // namespace reason

class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(std::string_view code, const std::string& detail)
      : std::runtime_error(detail), code_(code) {}
  const std::string& code() const noexcept { return code_; }
  /// Human-readable form of code().
  std::string reason() const;

 private:
  std::string code_;
};

struct SessionTurn {
  Speaker speaker;
  std::string text;

  friend bool operator==(const SessionTurn&, const SessionTurn&) = default;
};

struct WorkerLabel {
  bool sensible = false;
  bool specific = false;

  friend bool operator==(const WorkerLabel&, const WorkerLabel&) = default;
};

struct SessionRecord {
  std::string id;
  std::string model;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> config;  ///< snapshot at creation
  std::vector<SessionTurn> turns;
  std::map<int, std::map<std::string, WorkerLabel>> labels;  ///< turn -> worker
  SessionStatus status = SessionStatus::kActive;

  int size() const { return static_cast<int>(turns.size()); }
  /// Speaker whose turn comes next.
  Speaker next_speaker() const;
  /// Bot turns after the opener that have no label yet.
  std::vector<int> unlabeled_bot_turns() const;
  bool can_finish() const;

  friend bool operator==(const SessionRecord&, const SessionRecord&) = default;
};

namespace event {
struct Create {
  std::string id;
  std::string model;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> config;
};
struct UserTurn {
  std::string text;
};
struct BotTurn {
  std::string text;
};
struct Label {
  int turn = 0;
  std::string worker;
  bool sensible = false;
  bool specific = false;
};
struct Finish {};
struct Abandon {};
}  // namespace event

using SessionEvent = std::variant<event::Create, event::UserTurn, event::BotTurn,
                                  event::Label, event::Finish, event::Abandon>;

/// A fresh record holding only the bot's opener.
SessionRecord start_session(const event::Create& create);

/// Applies one event. Throws ProtocolError and leaves `record` untouched
/// when the event is illegal. Rules: speakers alternate and the total
/// never exceeds kMaxSessionTurns; labels go on bot turns after the opener
/// (any status; the latest label per worker wins, not-sensible forces
/// not-specific); finish needs an active session of
/// [kMinSessionTurns, kMaxSessionTurns] turns with every bot turn labelled.
void session_step(SessionRecord& record, const SessionEvent& event);

/// Rebuilds a record from its events; the first must be Create.
SessionRecord replay_session(std::span<const SessionEvent> events);

/// Invariant violations of a record (empty when valid).
std::vector<std::string> validate_session(const SessionRecord& record);

/// Labelled bot turns of a record in turn order, ready for aggregate().
std::vector<TurnLabels> session_turn_labels(const SessionRecord& record);

/// Turn texts in order.
std::vector<std::string> session_history(const SessionRecord& record);

}  // namespace dialogkit
