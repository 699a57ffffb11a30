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
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"

#include "dialogkit/evalharness.hpp"
#include "dialogkit/text.hpp"

namespace dialogkit {

using Json = nlohmann::json;

/// Error surfaced to API clients as {code, reason, detail} with an HTTP
/// status.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, std::string code, std::string reason, const std::string& detail)
      : std::runtime_error(detail),
        status_(status),
        code_(std::move(code)),
        reason_(std::move(reason)) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }
  const std::string& reason() const { return reason_; }
  Json body() const { return {{"code", code_}, {"reason", reason_}, {"detail", what()}}; }

 private:
  int status_;
  std::string code_;
  std::string reason_;
};

struct ModelEntry {
  std::string id;
  std::string kind;  ///< "generic" or "ngram"
  std::shared_ptr<const Bot> bot;
  std::optional<double> perplexity;
  std::map<std::string, std::string> config;
};

class ModelRegistry {
 public:
  /// Starts with the "generic" bot registered.
  ModelRegistry();

  void add(ModelEntry entry);
  const ModelEntry* find(const std::string& id) const;
  std::vector<const ModelEntry*> list() const;

  /// JSON registry: {"models": [{"id", "kind", "model", "tokenizer",
  /// "perplexity", "decoding": {...}, "repetition": {...}}]}. Relative
  /// paths resolve against the registry file's directory.
  static ModelRegistry from_file(const std::string& path);
  static ModelRegistry from_json(const Json& j, const std::string& base_dir = ".");

 private:
  std::map<std::string, ModelEntry> models_;
};

std::map<std::string, std::string> config_snapshot(const DecodingConfig& d,
                                                   const RepetitionConfig& r);
DecodingConfig decoding_from_json(const Json& j, DecodingConfig base = {});
RepetitionConfig repetition_from_json(const Json& j, RepetitionConfig base = {});

/// One line of the event log.
struct StoredEvent {
  std::uint64_t seq = 0;
  std::string session;
  std::string ts;
  Json event;
};

/// Append-only newline-delimited JSON log. Opening replays the file; a
/// trailing partial line (torn write) is dropped and truncated away, any
/// other malformed line is a FormatError("log_corrupt").
class EventLog {
 public:
  explicit EventLog(std::string path);

  const std::vector<StoredEvent>& replayed() const { return replayed_; }
  /// Assigns the next sequence number and timestamp, writes and flushes.
  StoredEvent append(const std::string& session, Json event);
  std::uint64_t last_seq() const { return last_seq_; }
  /// Lines dropped as torn while opening.
  std::size_t torn_lines() const { return torn_; }

 private:
  std::string path_;
  std::ofstream out_;
  std::vector<StoredEvent> replayed_;
  std::uint64_t last_seq_ = 0;
  std::size_t torn_ = 0;
};

Json to_json(const StoredEvent& e);
StoredEvent stored_event_from_json(const Json& j);

/// Event payload <-> session event. "exchange" expands to a user and a
/// bot turn.
std::vector<SessionEvent> session_events_from_json(const Json& event);

Json session_to_json(const SessionRecord& r);

/// The evaluation service: session lifecycle, labels and summaries over a
/// persistent event log. Thread-safe.
class SessionService {
 public:
  SessionService(ModelRegistry models, const std::string& log_path,
                 std::uint64_t base_seed = 0);

  /// body: {"model": id, "seed"?: uint or decimal string}
  Json create_session(const Json& body);
  /// body: {"text": str, "diagnostics"?: bool}
  Json post_user_turn(const std::string& id, const Json& body);
  /// body: {"turn", "worker", "sensible", "specific"}
  Json submit_label(const std::string& id, const Json& body);
  Json finish(const std::string& id);
  Json abandon(const std::string& id);
  Json get_session(const std::string& id) const;
  Json list_sessions() const;
  Json models() const;
  /// Per-model results over complete sessions; a perplexity regression
  /// when at least two models with distinct perplexities qualify.
  Json summary(const std::optional<std::set<std::string>>& only = std::nullopt) const;

  std::size_t torn_lines() const { return log_.torn_lines(); }

 private:
  struct Slot {
    mutable std::mutex mu;
    SessionRecord record;
  };
  std::shared_ptr<Slot> slot(const std::string& id) const;
  Json commit(Slot& s, Json event);

  ModelRegistry models_;
  std::uint64_t base_seed_;
  mutable std::shared_mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::mutex log_mu_;
  EventLog log_;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  ///< 0 picks a free port
  std::optional<std::string> bearer_token;
};

/// HTTP front end: POST /sessions, POST /sessions/{id}/turns,
/// POST /sessions/{id}/labels, POST /sessions/{id}/finish,
/// POST /sessions/{id}/abandon, GET /sessions, GET /sessions/{id},
/// GET /summary[?models=a,b], GET /models.
class HttpServer {
 public:
  HttpServer(SessionService& service, ServerOptions options);
  ~HttpServer();
  /// Binds; returns the bound port. Throws on failure.
  int bind();
  /// Serves until stop(). Call bind() first.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dialogkit
