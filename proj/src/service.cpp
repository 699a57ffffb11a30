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

#include "dialogkit/service.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <sstream>

#include "dialogkit/ngram_lm.hpp"
#include "dialogkit/text.hpp"

namespace dialogkit {

namespace {

ServiceError bad_request(const std::string& detail) {
  return ServiceError(400, "bad_request", "bad request", detail);
}

ServiceError not_found(const std::string& what) {
  return ServiceError(404, "not_found", "not found", what);
}

ServiceError unknown_model(const std::string& id) {
  return ServiceError(404, "unknown_model", "unknown model", "no model '" + id + "'");
}

ServiceError from_protocol(const ProtocolError& e) {
  return ServiceError(409, e.code(), e.reason(), e.what());
}

std::string now_utc() {
  using namespace std::chrono;
  const auto now = system_clock::now();
  const std::time_t t = system_clock::to_time_t(now);
  const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

template <typename T>
T field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw bad_request(std::string("missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw bad_request(std::string("field '") + key + "' has the wrong type");
  }
}

std::uint64_t parse_seed(const Json& j) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<long long>() >= 0) return j.get<std::uint64_t>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (!s.empty() && s.find_first_not_of("0123456789") == std::string::npos) {
      try {
        return std::stoull(s);
      } catch (const std::out_of_range&) {
      }
    }
  }
  throw bad_request("seed must be a non-negative integer");
}

}  // namespace

// ---------------------------------------------------------------------------

std::map<std::string, std::string> config_snapshot(const DecodingConfig& d,
                                                   const RepetitionConfig& r) {
  return {
      {"temperature", Json(d.temperature).dump()},
      {"top_k", d.top_k ? std::to_string(*d.top_k) : "none"},
      {"num_samples", std::to_string(d.num_samples)},
      {"max_response_tokens", std::to_string(d.max_response_tokens)},
      {"rank_by", to_string(d.rank_by)},
      {"rep_mode", to_string(r.mode)},
      {"rep_min_tokens", std::to_string(r.min_tokens)},
      {"rep_min_fraction", Json(r.min_fraction).dump()},
      {"rep_normalize", r.normalize ? "true" : "false"},
  };
}

DecodingConfig decoding_from_json(const Json& j, DecodingConfig d) {
  if (j.is_null()) return d;
  if (j.contains("temperature")) d.temperature = j.at("temperature").get<double>();
  if (j.contains("top_k")) {
    if (j.at("top_k").is_null()) d.top_k.reset();
    else d.top_k = j.at("top_k").get<int>();
  }
  if (j.contains("num_samples")) d.num_samples = j.at("num_samples").get<int>();
  if (j.contains("max_response_tokens")) {
    d.max_response_tokens = j.at("max_response_tokens").get<int>();
  }
  if (j.contains("rank_by")) d.rank_by = parse_rank_by(j.at("rank_by").get<std::string>());
  d.validate();
  return d;
}

RepetitionConfig repetition_from_json(const Json& j, RepetitionConfig r) {
  if (j.is_null()) return r;
  if (j.contains("mode")) r.mode = parse_repetition_mode(j.at("mode").get<std::string>());
  if (j.contains("min_tokens")) r.min_tokens = j.at("min_tokens").get<int>();
  if (j.contains("min_fraction")) r.min_fraction = j.at("min_fraction").get<double>();
  if (j.contains("normalize")) r.normalize = j.at("normalize").get<bool>();
  r.validate();
  return r;
}

ModelRegistry::ModelRegistry() {
  add({"generic", "generic", std::make_shared<GenericBot>(), std::nullopt, {}});
}

void ModelRegistry::add(ModelEntry entry) {
  if (entry.id.empty()) throw std::invalid_argument("model id must not be empty");
  if (!entry.bot) throw std::invalid_argument("model '" + entry.id + "' has no bot");
  const std::string id = entry.id;
  models_[id] = std::move(entry);
}

const ModelEntry* ModelRegistry::find(const std::string& id) const {
  auto it = models_.find(id);
  return it == models_.end() ? nullptr : &it->second;
}

std::vector<const ModelEntry*> ModelRegistry::list() const {
  std::vector<const ModelEntry*> out;
  for (const auto& [_, m] : models_) out.push_back(&m);
  return out;
}

ModelRegistry ModelRegistry::from_json(const Json& j, const std::string& base_dir) {
  ModelRegistry reg;
  const auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? p : (std::filesystem::path(base_dir) / path).string();
  };
  if (!j.contains("models") || !j.at("models").is_array()) {
    throw FormatError("registry", "registry needs a \"models\" array");
  }
  for (const auto& m : j.at("models")) {
    try {
      ModelEntry e;
      e.id = m.at("id").get<std::string>();
      e.kind = m.value("kind", std::string("ngram"));
      if (m.contains("perplexity") && !m.at("perplexity").is_null()) {
        e.perplexity = m.at("perplexity").get<double>();
      }
      if (e.kind == "generic") {
        e.bot = std::make_shared<GenericBot>();
      } else if (e.kind == "ngram") {
        const auto dec = decoding_from_json(m.value("decoding", Json()));
        const auto rep = repetition_from_json(m.value("repetition", Json()));
        const std::string tok = m.value("tokenizer", std::string("whitespace"));
        auto lm = std::make_shared<NGramLm>(NGramLm::load(resolve(m.at("model").get<std::string>())));
        std::shared_ptr<const Tokenizer> tokenizer =
            load_tokenizer(tok == "whitespace" ? tok : resolve(tok));
        e.bot = std::make_shared<LmBot>(std::move(lm), std::move(tokenizer), dec, rep);
        e.config = config_snapshot(dec, rep);
        e.config["tokenizer"] = tok;
      } else {
        throw FormatError("registry", "unknown model kind '" + e.kind + "'");
      }
      reg.add(std::move(e));
    } catch (const Json::exception& ex) {
      throw FormatError("registry", std::string("bad model entry: ") + ex.what());
    } catch (const std::invalid_argument& ex) {
      throw FormatError("registry", std::string("bad model entry: ") + ex.what());
    }
  }
  return reg;
}

ModelRegistry ModelRegistry::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("io", "cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw FormatError("registry", path + ": " + e.what());
  }
  return from_json(j, std::filesystem::path(path).parent_path().string());
}

// ---------------------------------------------------------------------------

Json to_json(const StoredEvent& e) {
  return {{"seq", e.seq}, {"session", e.session}, {"ts", e.ts}, {"event", e.event}};
}

StoredEvent stored_event_from_json(const Json& j) {
  StoredEvent e;
  e.seq = j.at("seq").get<std::uint64_t>();
  e.session = j.at("session").get<std::string>();
  e.ts = j.at("ts").get<std::string>();
  e.event = j.at("event");
  if (!e.event.is_object() || !e.event.contains("type")) {
    throw std::invalid_argument("event without type");
  }
  return e;
}

EventLog::EventLog(std::string path) : path_(std::move(path)) {
  std::string content;
  if (std::ifstream in{path_, std::ios::binary}) {
    std::ostringstream ss;
    ss << in.rdbuf();
    content = ss.str();
  }
  std::size_t pos = 0, good_end = 0;
  int lineno = 0;
  while (pos < content.size()) {
    ++lineno;
    const std::size_t nl = content.find('\n', pos);
    const bool complete = nl != std::string::npos;
    const std::string line = content.substr(pos, complete ? nl - pos : std::string::npos);
    std::optional<StoredEvent> ev;
    try {
      ev = stored_event_from_json(Json::parse(line));
    } catch (const std::exception&) {
    }
    if (!complete) {
      // A write cut short by a crash; whatever parsed is not trusted.
      ++torn_;
      break;
    }
    if (!ev) {
      throw FormatError("log_corrupt", path_ + ": line " + std::to_string(lineno) +
                                           " is not a valid event");
    }
    if (ev->seq <= last_seq_) {
      throw FormatError("log_corrupt", path_ + ": line " + std::to_string(lineno) +
                                           " has a non-increasing sequence number");
    }
    last_seq_ = ev->seq;
    replayed_.push_back(std::move(*ev));
    pos = nl + 1;
    good_end = pos;
  }
  if (good_end < content.size()) std::filesystem::resize_file(path_, good_end);
  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) throw FormatError("io", "cannot open event log " + path_);
}

StoredEvent EventLog::append(const std::string& session, Json event) {
  StoredEvent e{last_seq_ + 1, session, now_utc(), std::move(event)};
  out_ << to_json(e).dump() << '\n';
  out_.flush();
  if (!out_) throw FormatError("io", "write to event log " + path_ + " failed");
  last_seq_ = e.seq;
  return e;
}

std::vector<SessionEvent> session_events_from_json(const Json& ev) {
  const std::string type = ev.at("type").get<std::string>();
  if (type == "create") {
    event::Create c;
    c.model = ev.at("model").get<std::string>();
    c.seed = parse_seed(ev.at("seed"));
    c.config = ev.value("config", std::map<std::string, std::string>{});
    return {c};
  }
  if (type == "exchange") {
    return {event::UserTurn{ev.at("user").get<std::string>()},
            event::BotTurn{ev.at("bot").get<std::string>()}};
  }
  if (type == "label") {
    return {event::Label{ev.at("turn").get<int>(), ev.at("worker").get<std::string>(),
                         ev.at("sensible").get<bool>(), ev.at("specific").get<bool>()}};
  }
  if (type == "finish") return {event::Finish{}};
  if (type == "abandon") return {event::Abandon{}};
  throw std::invalid_argument("unknown event type '" + type + "'");
}

Json session_to_json(const SessionRecord& r) {
  Json turns = Json::array();
  for (int i = 0; i < r.size(); ++i) {
    Json t{{"index", i}, {"speaker", to_string(r.turns[i].speaker)}, {"text", r.turns[i].text}};
    if (r.turns[i].speaker == Speaker::kBot && i > 0) {
      Json labels = Json::object();
      if (auto it = r.labels.find(i); it != r.labels.end()) {
        for (const auto& [w, l] : it->second) {
          labels[w] = {{"sensible", l.sensible}, {"specific", l.specific}};
        }
      }
      t["labels"] = std::move(labels);
    }
    turns.push_back(std::move(t));
  }
  return {
      {"id", r.id},
      {"model", r.model},
      {"seed", std::to_string(r.seed)},
      {"config", r.config},
      {"status", to_string(r.status)},
      {"turns", std::move(turns)},
      {"n_turns", r.size()},
      {"next_speaker", to_string(r.next_speaker())},
      {"min_turns", kMinSessionTurns},
      {"max_turns", kMaxSessionTurns},
      {"turns_to_min", std::max(0, kMinSessionTurns - r.size())},
      {"turns_to_max", std::max(0, kMaxSessionTurns - r.size())},
      {"unlabeled_bot_turns", r.unlabeled_bot_turns()},
      {"can_finish", r.can_finish()},
  };
}

// ---------------------------------------------------------------------------

SessionService::SessionService(ModelRegistry models, const std::string& log_path,
                               std::uint64_t base_seed)
    : models_(std::move(models)), base_seed_(base_seed), log_(log_path) {
  for (const auto& stored : log_.replayed()) {
    try {
      const auto events = session_events_from_json(stored.event);
      auto it = sessions_.find(stored.session);
      if (std::holds_alternative<event::Create>(events.front())) {
        if (it != sessions_.end()) throw std::invalid_argument("session created twice");
        auto create = std::get<event::Create>(events.front());
        create.id = stored.session;
        auto s = std::make_shared<Slot>();
        s->record = start_session(create);
        sessions_.emplace(stored.session, std::move(s));
        continue;
      }
      if (it == sessions_.end()) throw std::invalid_argument("event for unknown session");
      for (const auto& e : events) session_step(it->second->record, e);
    } catch (const std::exception& e) {
      throw FormatError("log_corrupt", "event " + std::to_string(stored.seq) + ": " + e.what());
    }
  }
}

std::shared_ptr<SessionService::Slot> SessionService::slot(const std::string& id) const {
  std::shared_lock lock(sessions_mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw not_found("no session '" + id + "'");
  return it->second;
}

Json SessionService::commit(Slot& s, Json event) {
  // Validate on a copy so a rejected event leaves no trace.
  SessionRecord next = s.record;
  try {
    for (const auto& e : session_events_from_json(event)) session_step(next, e);
  } catch (const ProtocolError& e) {
    throw from_protocol(e);
  }
  {
    std::lock_guard lock(log_mu_);
    log_.append(next.id, std::move(event));
  }
  s.record = std::move(next);
  return session_to_json(s.record);
}

Json SessionService::create_session(const Json& body) {
  const auto model_id = field<std::string>(body, "model");
  const ModelEntry* model = models_.find(model_id);
  if (!model) throw unknown_model(model_id);
  std::unique_lock lock(sessions_mu_);
  const std::uint64_t n = sessions_.size() + 1;
  char id[32];
  std::snprintf(id, sizeof id, "s%06llu", static_cast<unsigned long long>(n));
  const std::uint64_t seed =
      body.contains("seed") && !body.at("seed").is_null() ? parse_seed(body.at("seed"))
                                                          : Rng::derive(base_seed_, n);
  Json ev{{"type", "create"},
          {"model", model_id},
          {"seed", std::to_string(seed)},
          {"config", model->config}};
  auto s = std::make_shared<Slot>();
  s->record = start_session(event::Create{id, model_id, seed, model->config});
  {
    std::lock_guard log_lock(log_mu_);
    log_.append(id, std::move(ev));
  }
  sessions_.emplace(id, s);
  return session_to_json(s->record);
}

Json SessionService::post_user_turn(const std::string& id, const Json& body) {
  const auto text = field<std::string>(body, "text");
  const bool want_diag = body.is_object() && body.value("diagnostics", false);
  auto s = slot(id);
  std::lock_guard lock(s->mu);
  const SessionRecord& r = s->record;
  if (r.status == SessionStatus::kActive && r.next_speaker() == Speaker::kUser &&
      r.size() + 2 > kMaxSessionTurns) {
    throw from_protocol(ProtocolError(
        reason::kSessionTooLong, "no room for another exchange; only finish is allowed"));
  }
  // Check the user turn before spending time on a reply.
  {
    SessionRecord probe = r;
    try {
      session_step(probe, event::UserTurn{text});
    } catch (const ProtocolError& e) {
      throw from_protocol(e);
    }
  }
  const ModelEntry* model = models_.find(r.model);
  if (!model) throw unknown_model(r.model);
  std::vector<std::string> history = session_history(r);
  history.push_back(text);
  const int bot_index = r.size() + 1;
  const BotReply reply = model->bot->reply(history, Rng::derive(r.seed, bot_index));

  Json view = commit(*s, Json{{"type", "exchange"}, {"user", text}, {"bot", reply.text}});
  Json out{{"reply", {{"index", bot_index}, {"text", reply.text}}}, {"session", std::move(view)}};
  if (want_diag && reply.diagnostics) {
    const auto& d = *reply.diagnostics;
    Json cands = Json::array();
    for (const auto& c : d.candidates) {
      cands.push_back({{"text", c.text},
                       {"token_count", c.token_count},
                       {"logprob_sum", c.logprob_sum},
                       {"score", c.score},
                       {"finished", c.finished},
                       {"repeats_turn", c.repeats_turn ? Json(*c.repeats_turn) : Json()}});
    }
    out["diagnostics"] = {{"seed", std::to_string(d.seed)},
                          {"chosen", d.chosen},
                          {"forced", d.forced},
                          {"candidates", std::move(cands)}};
  }
  return out;
}

Json SessionService::submit_label(const std::string& id, const Json& body) {
  const int turn = field<int>(body, "turn");
  const auto worker = field<std::string>(body, "worker");
  const bool sensible = field<bool>(body, "sensible");
  const bool specific = field<bool>(body, "specific");
  auto s = slot(id);
  std::lock_guard lock(s->mu);
  Json view = commit(*s, Json{{"type", "label"},
                              {"turn", turn},
                              {"worker", worker},
                              {"sensible", sensible},
                              {"specific", specific}});
  return {{"label",
           {{"turn", turn},
            {"worker", worker},
            {"sensible", sensible},
            {"specific", sensible && specific}}},
          {"session", std::move(view)}};
}

Json SessionService::finish(const std::string& id) {
  auto s = slot(id);
  std::lock_guard lock(s->mu);
  return commit(*s, Json{{"type", "finish"}});
}

Json SessionService::abandon(const std::string& id) {
  auto s = slot(id);
  std::lock_guard lock(s->mu);
  return commit(*s, Json{{"type", "abandon"}});
}

Json SessionService::get_session(const std::string& id) const {
  auto s = slot(id);
  std::lock_guard lock(s->mu);
  return session_to_json(s->record);
}

Json SessionService::list_sessions() const {
  std::vector<std::shared_ptr<Slot>> slots;
  {
    std::shared_lock lock(sessions_mu_);
    for (const auto& [_, s] : sessions_) slots.push_back(s);
  }
  Json out = Json::array();
  for (const auto& s : slots) {
    std::lock_guard lock(s->mu);
    const auto& r = s->record;
    out.push_back({{"id", r.id},
                   {"model", r.model},
                   {"status", to_string(r.status)},
                   {"n_turns", r.size()}});
  }
  return out;
}

Json SessionService::models() const {
  Json out = Json::array();
  for (const ModelEntry* m : models_.list()) {
    out.push_back({{"id", m->id},
                   {"kind", m->kind},
                   {"perplexity", m->perplexity ? Json(*m->perplexity) : Json()},
                   {"config", m->config}});
  }
  return out;
}

namespace {

Json optional_stat(const std::function<double()>& f) {
  try {
    return f();
  } catch (const std::exception&) {
    return nullptr;
  }
}

}  // namespace

Json SessionService::summary(const std::optional<std::set<std::string>>& only) const {
  // Gather labelled turns of complete sessions per model, in id order.
  std::map<std::string, std::vector<TurnLabels>> turns;
  std::map<std::string, int> sessions;
  std::vector<std::shared_ptr<Slot>> slots;
  {
    std::shared_lock lock(sessions_mu_);
    for (const auto& [_, s] : sessions_) slots.push_back(s);
  }
  for (const auto& s : slots) {
    std::lock_guard lock(s->mu);
    const auto& r = s->record;
    if (r.status != SessionStatus::kComplete) continue;
    if (only && !only->count(r.model)) continue;
    auto labels = session_turn_labels(r);
    auto& dst = turns[r.model];
    dst.insert(dst.end(), labels.begin(), labels.end());
    sessions[r.model] += 1;
  }

  Json models = Json::array();
  std::vector<double> xs, ys;
  std::set<double> distinct_ppl;
  for (const auto& [model, labels] : turns) {
    if (labels.empty()) continue;
    const EvalResult r = aggregate(labels);
    const ModelEntry* entry = models_.find(model);
    const std::optional<double> ppl = entry ? entry->perplexity : std::nullopt;
    const auto sm = sensible_matrix(labels), pm = specific_matrix(labels);
    models.push_back({
        {"model", model},
        {"perplexity", ppl ? Json(*ppl) : Json()},
        {"sessions", sessions[model]},
        {"n_turns", r.n_turns},
        {"sensibleness", r.sensibleness},
        {"specificity", r.specificity},
        {"ssa", r.ssa},
        {"agreement",
         {{"sensible", optional_stat([&] { return pairwise_agreement(sm); })},
          {"specific", optional_stat([&] { return pairwise_agreement(pm); })}}},
        {"alpha",
         {{"sensible", optional_stat([&] { return krippendorff_alpha(sm); })},
          {"specific", optional_stat([&] { return krippendorff_alpha(pm); })}}},
    });
    if (ppl) {
      xs.push_back(*ppl);
      ys.push_back(r.ssa);
      distinct_ppl.insert(*ppl);
    }
  }
  if (models.empty()) {
    return {{"status", "not enough data"},
            {"models", Json::array()},
            {"regression_status", "not enough data"}};
  }
  Json out{{"status", "ok"}, {"models", std::move(models)}};
  if (distinct_ppl.size() < 2) {
    out["regression_status"] = "not enough data";
    return out;
  }
  try {
    const RegressionFit fit = fit_line(xs, ys);
    out["regression"] = {{"x", "perplexity"},
                         {"y", "ssa"},
                         {"n", xs.size()},
                         {"slope", fit.slope},
                         {"intercept", fit.intercept},
                         {"r_squared", fit.r_squared}};
    out["regression_status"] = "ok";
  } catch (const DegenerateError& e) {
    out["regression_status"] = e.what();
  }
  return out;
}

}  // namespace dialogkit
