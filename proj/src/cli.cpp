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

#include "dialogkit/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <pthread.h>
#include <set>
#include <sstream>
#include <thread>

#include "dialogkit/dataset.hpp"
#include "dialogkit/evalharness.hpp"
#include "dialogkit/metrics.hpp"
#include "dialogkit/ngram_lm.hpp"
#include "dialogkit/service.hpp"
#include "dialogkit/text.hpp"
#include "dialogkit/tokenizer.hpp"

namespace dialogkit {

std::string format_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, r.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

namespace {

namespace fs = std::filesystem;

/// Failure with a machine-readable code; exits 1 unless it is a usage error.
struct CliError : std::runtime_error {
  CliError(std::string c, const std::string& what, int exit = kExitFailure)
      : std::runtime_error(what), code(std::move(c)), exit_code(exit) {}
  std::string code;
  int exit_code;
};

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * v);
  return buf;
}

/// Writes to the named file, or to `fallback` for "-" or an empty name.
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw CliError("io", "cannot write " + path);
      stream_ = &file_;
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

std::vector<TrainingPair> read_pairs(const std::string& path) {
  std::vector<TrainingPair> pairs;
  for (const auto& line : text::read_lines(path)) {
    if (line.empty()) continue;
    pairs.push_back(parse_pair(line));
  }
  return pairs;
}

// --------------------------------------------------------------------------
// Shared option groups.

struct DecodingFlags {
  int n = DecodingConfig{}.num_samples;
  double temperature = DecodingConfig{}.temperature;
  int top_k = 0;
  int max_tokens = DecodingConfig{}.max_response_tokens;
  std::string rank_by = "normalized";
  std::string rep_mode = "contiguous";
  int rep_min_tokens = RepetitionConfig{}.min_tokens;
  double rep_min_fraction = RepetitionConfig{}.min_fraction;

  void add(CLI::App& app) {
    app.add_option("--n", n, "Samples per reply")->capture_default_str();
    app.add_option("--temperature", temperature, "Sampling temperature")->capture_default_str();
    app.add_option("--top-k", top_k, "Keep the k most likely tokens (0 = off)")
        ->capture_default_str();
    app.add_option("--max-tokens", max_tokens, "Longest reply in tokens")->capture_default_str();
    app.add_option("--rank-by", rank_by, "normalized or raw")->capture_default_str();
    app.add_option("--rep-mode", rep_mode, "contiguous or subsequence")->capture_default_str();
    app.add_option("--rep-min-tokens", rep_min_tokens, "Shortest run that counts")
        ->capture_default_str();
    app.add_option("--rep-min-fraction", rep_min_fraction, "Run length as a share of the turn")
        ->capture_default_str();
  }

  DecodingConfig decoding() const {
    DecodingConfig d;
    d.num_samples = n;
    d.temperature = temperature;
    if (top_k > 0) d.top_k = top_k;
    d.max_response_tokens = max_tokens;
    d.rank_by = parse_rank_by(rank_by);
    d.validate();
    return d;
  }

  RepetitionConfig repetition() const {
    RepetitionConfig r;
    r.mode = parse_repetition_mode(rep_mode);
    r.min_tokens = rep_min_tokens;
    r.min_fraction = rep_min_fraction;
    r.validate();
    return r;
  }
};

struct BotFlags {
  std::string model;
  std::string tokenizer = "whitespace";
  DecodingFlags decoding;

  void add(CLI::App& app) {
    app.add_option("--model", model, "\"generic\" or an n-gram model file")->required();
    app.add_option("--tokenizer", tokenizer, "\"whitespace\" or a BPE model file")
        ->capture_default_str();
    decoding.add(app);
  }

  std::shared_ptr<const Bot> bot() const {
    if (model == "generic") return std::make_shared<GenericBot>();
    if (!fs::exists(model)) throw CliError("usage", "model file not found: " + model, kExitUsage);
    if (tokenizer != "whitespace" && !fs::exists(tokenizer)) {
      throw CliError("usage", "tokenizer file not found: " + tokenizer, kExitUsage);
    }
    auto lm = std::make_shared<NGramLm>(NGramLm::load(model));
    std::shared_ptr<const Tokenizer> tok = load_tokenizer(tokenizer);
    return std::make_shared<LmBot>(std::move(lm), std::move(tok), decoding.decoding(),
                                   decoding.repetition());
  }
};

// --------------------------------------------------------------------------
// Subcommands.

struct MineCmd {
  std::string input, pairs, removals, summary, tokenizer = "whitespace", unsafe_words;
  std::string bot_match = "substring";
  FilterConfig cfg;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("mine", "Message trees in, training pairs and removal report out");
    c->add_option("input", input, "Message file (id, parent, author, text)")
        ->required()
        ->check(CLI::ExistingFile);
    c->add_option("--pairs", pairs, "Pair output (default stdout)");
    c->add_option("--removals", removals, "Removal report output")->required();
    c->add_option("--summary", summary, "Summary counts output (default stderr)");
    c->add_option("--tokenizer", tokenizer, "Tokenizer for the length rule")->capture_default_str();
    c->add_option("--min-subwords", cfg.min_subwords)->capture_default_str();
    c->add_option("--max-subwords", cfg.max_subwords)->capture_default_str();
    c->add_option("--min-alpha", cfg.min_alpha_fraction)->capture_default_str();
    c->add_option("--max-repeats", cfg.max_global_repeats)->capture_default_str();
    c->add_option("--parent-overlap", cfg.parent_overlap_threshold)->capture_default_str();
    c->add_option("--overlap-order", cfg.overlap_ngram_order)->capture_default_str();
    c->add_option("--bot-match", bot_match, "substring or word")->capture_default_str();
    c->add_option("--unsafe-words", unsafe_words, "Word list; messages containing one are unsafe")
        ->check(CLI::ExistingFile);
  }

  int run(std::ostream& out, std::ostream& err) {
    if (bot_match == "substring") cfg.bot_match = BotMatch::kSubstring;
    else if (bot_match == "word") cfg.bot_match = BotMatch::kWord;
    else throw CliError("usage", "--bot-match must be substring or word", kExitUsage);
    if (!unsafe_words.empty()) {
      std::set<std::string> words;
      for (const auto& w : text::read_lines(unsafe_words)) {
        const auto t = text::normalize_whitespace(w);
        if (!t.empty()) words.insert(text::to_lower_ascii(t));
      }
      cfg.unsafe = [words](std::string_view s) {
        for (const auto& tok : text::split_whitespace(text::to_lower_ascii(s))) {
          if (words.count(tok)) return true;
        }
        return false;
      };
    }
    cfg.validate();
    const auto tok = load_tokenizer(tokenizer);
    const auto forest = build_forest(read_messages_file(input));
    const MineResult r = mine(forest, cfg, *tok);
    Output p(pairs, out), rm(removals, out), sm(summary, err);
    write_pairs(*p, r.pairs);
    write_removals(*rm, r.removals);
    write_summary(*sm, r.summary);
    return kExitOk;
  }
};

struct BpeTrainCmd {
  std::string input, output;
  int vocab_size = 0;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("bpe-train", "Learn a byte-pair vocabulary");
    c->add_option("input", input, "One sentence per line")->required()->check(CLI::ExistingFile);
    c->add_option("--vocab-size", vocab_size, "Piece budget (characters included)")->required();
    c->add_option("--out", output, "Model output")->required();
  }

  int run(std::ostream& out) {
    const auto lines = text::read_lines(input);
    const BpeModel model = BpeModel::train(lines, vocab_size);
    model.save(output);
    out << "chars\t" << model.chars().size() << '\n'
        << "merges\t" << model.merges().size() << '\n'
        << "pieces\t" << model.vocabulary().size() << '\n';
    return kExitOk;
  }
};

struct TrainLmCmd {
  std::string input, output, tokenizer = "whitespace";
  int order = 3;
  double delta = 0.1;
  bool uniform = false;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("train-lm", "Train an n-gram model on mined pairs");
    c->add_option("input", input, "Pair file from `mine`")->required()->check(CLI::ExistingFile);
    c->add_option("--out", output, "Model output")->required();
    c->add_option("--tokenizer", tokenizer)->capture_default_str();
    c->add_option("--order", order)->capture_default_str();
    c->add_option("--delta", delta, "Add-delta smoothing")->capture_default_str();
    c->add_flag("--uniform", uniform, "Uniform model over the corpus vocabulary");
  }

  int run(std::ostream& out) {
    const auto tok = load_tokenizer(tokenizer);
    const auto pairs = read_pairs(input);
    std::set<std::string> pieces;
    for (const auto& p : tok->vocabulary()) pieces.insert(p);
    for (const auto& pair : pairs) {
      for (const auto& turn : pair.context) {
        for (auto& p : tok->encode(turn)) pieces.insert(std::move(p));
      }
      for (auto& p : tok->encode(pair.response)) pieces.insert(std::move(p));
    }
    const std::vector<std::string> list(pieces.begin(), pieces.end());
    Vocab vocab(list);
    std::vector<TokenSeq> corpus;
    for (const auto& pair : pairs) corpus.push_back(training_sequence(vocab, *tok, pair));
    const NGramLm lm = uniform ? NGramLm::uniform(vocab) : NGramLm::train(vocab, corpus, order, delta);
    lm.save(output);
    out << "vocab\t" << vocab.size() << '\n' << "sequences\t" << corpus.size() << '\n';
    return kExitOk;
  }
};

struct PplCmd {
  std::string input, model, tokenizer = "whitespace", format = "pairs";
  bool json = false;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("ppl", "Perplexity of a model on a token file");
    c->add_option("input", input, "Pair file, or one text per line with --format text")
        ->required()
        ->check(CLI::ExistingFile);
    c->add_option("--model", model)->required()->check(CLI::ExistingFile);
    c->add_option("--tokenizer", tokenizer)->capture_default_str();
    c->add_option("--format", format, "pairs or text")->capture_default_str();
    c->add_flag("--json", json);
  }

  int run(std::ostream& out) {
    const auto tok = load_tokenizer(tokenizer);
    const NGramLm lm = NGramLm::load(model);
    std::vector<TokenSeq> seqs;
    if (format == "pairs") {
      for (const auto& pair : read_pairs(input)) {
        seqs.push_back(training_sequence(lm.vocab(), *tok, pair));
      }
    } else if (format == "text") {
      for (const auto& line : text::read_lines(input)) {
        if (text::normalize_whitespace(line).empty()) continue;
        seqs.push_back(lm.vocab().encode(tok->encode(line)));
      }
    } else {
      throw CliError("usage", "--format must be pairs or text", kExitUsage);
    }
    if (seqs.empty()) throw CliError("empty_input", input + " holds no sequences");
    const PerplexityResult r = evaluate_perplexity(lm, seqs);
    if (json) {
      out << Json{{"perplexity", r.perplexity}, {"nll", r.nll}, {"tokens", r.tokens}}.dump() << '\n';
    } else {
      out << "perplexity\t" << format_number(r.perplexity) << '\n'
          << "tokens\t" << r.tokens << '\n'
          << "nll\t" << format_number(r.nll) << '\n';
    }
    return kExitOk;
  }
};

struct ChatCmd {
  BotFlags bot;
  std::uint64_t seed = 0;
  std::string transcript, worker = "cli";

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("chat", "Terminal conversation with a bot");
    bot.add(*c);
    c->add_option("--seed", seed)->required();
    c->add_option("--transcript", transcript, "Write the session record here as JSON");
    c->add_option("--worker", worker, "Worker id for /label")->capture_default_str();
    c->footer(
        "Commands: /label TURN SENSIBLE SPECIFIC (1/0), /status, /finish, /abandon.\n"
        "End of input finishes the session when allowed, otherwise abandons it.");
  }

  static std::optional<bool> bit(const std::string& s) {
    if (s == "1" || s == "y" || s == "yes" || s == "true") return true;
    if (s == "0" || s == "n" || s == "no" || s == "false") return false;
    return std::nullopt;
  }

  int run(std::istream& in, std::ostream& out) {
    const auto b = bot.bot();
    SessionRecord record = start_session(event::Create{"chat", bot.model, seed, {}});
    out << "[0] bot: " << record.turns[0].text << '\n';
    const auto status = [&] {
      out << "turns " << record.size() << "/" << kMaxSessionTurns << ", minimum "
          << kMinSessionTurns << ", unlabeled " << record.unlabeled_bot_turns().size()
          << ", status " << to_string(record.status) << '\n';
    };
    const auto apply = [&](const SessionEvent& e) {
      try {
        session_step(record, e);
        return true;
      } catch (const ProtocolError& p) {
        out << "! " << p.code() << ": " << p.what() << '\n';
        return false;
      }
    };
    std::string line;
    bool closed = false;
    while (!closed && std::getline(in, line)) {
      const std::string trimmed = text::normalize_whitespace(line);
      if (trimmed.empty()) continue;
      if (trimmed[0] == '/') {
        std::istringstream cmd(trimmed);
        std::string name;
        cmd >> name;
        if (name == "/status") {
          status();
        } else if (name == "/finish") {
          closed = apply(event::Finish{});
        } else if (name == "/abandon") {
          closed = apply(event::Abandon{});
        } else if (name == "/label") {
          int turn = -1;
          std::string s, p;
          cmd >> turn >> s >> p;
          const auto sens = bit(s), spec = bit(p);
          if (!cmd || !sens || !spec) {
            out << "! usage: /label TURN SENSIBLE SPECIFIC\n";
          } else if (apply(event::Label{turn, worker, *sens, *spec})) {
            out << "labelled turn " << turn << '\n';
          }
        } else {
          out << "! unknown command " << name << '\n';
        }
        continue;
      }
      if (record.status == SessionStatus::kActive && record.size() + 2 > kMaxSessionTurns) {
        out << "! " << reason::kSessionTooLong << ": only /finish is allowed now\n";
        continue;
      }
      if (!apply(event::UserTurn{trimmed})) continue;
      const int idx = record.size();
      const BotReply reply = b->reply(session_history(record), Rng::derive(seed, idx));
      apply(event::BotTurn{reply.text});
      out << "[" << idx << "] bot: " << reply.text << '\n';
    }
    if (record.status == SessionStatus::kActive) {
      session_step(record, record.can_finish() ? SessionEvent{event::Finish{}}
                                               : SessionEvent{event::Abandon{}});
    }
    status();
    if (!transcript.empty()) {
      Output t(transcript, out);
      *t << session_to_json(record).dump(2) << '\n';
    }
    return kExitOk;
  }
};

struct EvalStaticCmd {
  BotFlags bot;
  std::uint64_t seed = 0;
  std::string input, output;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("eval-static", "Answer every context of a benchmark file");
    bot.add(*c);
    c->add_option("input", input, "Context file, up to three turns per line")
        ->required()
        ->check(CLI::ExistingFile);
    c->add_option("--seed", seed)->required();
    c->add_option("--out", output, "Response file (default stdout)");
  }

  int run(std::ostream& out) {
    const auto b = bot.bot();
    const auto contexts = read_mtb_file(input);
    const auto responses = run_static_eval(*b, contexts, seed);
    Output o(output, out);
    write_static_responses(*o, responses);
    return kExitOk;
  }
};

Json agreement_json(std::span<const TurnLabels> turns) {
  const auto stat = [](auto f) -> Json {
    try {
      return f();
    } catch (const std::exception&) {
      return nullptr;
    }
  };
  const auto sm = sensible_matrix(turns), pm = specific_matrix(turns);
  return {{"agreement",
           {{"sensible", stat([&] { return pairwise_agreement(sm); })},
            {"specific", stat([&] { return pairwise_agreement(pm); })}}},
          {"alpha",
           {{"sensible", stat([&] { return krippendorff_alpha(sm); })},
            {"specific", stat([&] { return krippendorff_alpha(pm); })}}}};
}

std::string stat_text(const Json& v) {
  return v.is_null() ? "n/a" : format_number(v.get<double>());
}

struct ScoreCmd {
  std::string input;
  bool json = false;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("score", "Labels file in, sensibleness/specificity/SSA out");
    c->add_option("input", input, "Label records")->required()->check(CLI::ExistingFile);
    c->add_flag("--json", json);
  }

  int run(std::ostream& out) {
    const auto records = read_label_file(input);
    const auto turns = labels_in_order(group_labels(records));
    if (turns.empty()) throw CliError("empty_input", input + " holds no labels");
    const EvalResult r = aggregate(turns);
    const Json agree = agreement_json(turns);
    if (json) {
      Json j{{"n_turns", r.n_turns},
             {"sensibleness", r.sensibleness},
             {"specificity", r.specificity},
             {"ssa", r.ssa}};
      j.update(agree);
      out << j.dump() << '\n';
      return kExitOk;
    }
    out << "turns\t" << r.n_turns << '\n'
        << "sensibleness\t" << percent(r.sensibleness) << '\n'
        << "specificity\t" << percent(r.specificity) << '\n'
        << "SSA\t" << percent(r.ssa) << '\n'
        << "agreement\t" << stat_text(agree["agreement"]["sensible"]) << '\t'
        << stat_text(agree["agreement"]["specific"]) << '\n'
        << "alpha\t" << stat_text(agree["alpha"]["sensible"]) << '\t'
        << stat_text(agree["alpha"]["specific"]) << '\n';
    return kExitOk;
  }
};

struct CorrelateCmd {
  std::string input;
  bool json = false;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("correlate", "Fit SSA against perplexity across configs");
    c->add_option("input", input, "Config file: id, perplexity, label file per line")
        ->required()
        ->check(CLI::ExistingFile);
    c->add_flag("--json", json);
  }

  int run(std::ostream& out) {
    const fs::path base = fs::path(input).parent_path();
    struct Row {
      std::string id;
      double perplexity;
      EvalResult result;
    };
    std::vector<Row> rows;
    int lineno = 0;
    for (const auto& line : text::read_lines(input)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      const auto f = text::split_record(line);
      if (f.size() != 3) {
        throw FormatError("bad_record", input + ":" + std::to_string(lineno) + ": expected 3 fields");
      }
      double ppl = 0;
      const auto pr = std::from_chars(f[1].data(), f[1].data() + f[1].size(), ppl);
      if (pr.ec != std::errc() || pr.ptr != f[1].data() + f[1].size()) {
        throw FormatError("bad_record", input + ":" + std::to_string(lineno) + ": bad perplexity");
      }
      fs::path labels(f[2]);
      if (labels.is_relative()) labels = base / labels;
      if (!fs::exists(labels)) {
        throw CliError("usage", "label file not found: " + labels.string(), kExitUsage);
      }
      const auto turns = labels_in_order(group_labels(read_label_file(labels.string())));
      if (turns.empty()) throw CliError("empty_input", labels.string() + " holds no labels");
      rows.push_back({f[0], ppl, aggregate(turns)});
    }
    std::vector<double> x, y;
    for (const auto& r : rows) {
      x.push_back(r.perplexity);
      y.push_back(r.result.ssa);
    }
    const RegressionFit fit = fit_line(x, y);
    if (json) {
      Json configs = Json::array();
      for (const auto& r : rows) {
        configs.push_back({{"id", r.id},
                           {"perplexity", r.perplexity},
                           {"n_turns", r.result.n_turns},
                           {"sensibleness", r.result.sensibleness},
                           {"specificity", r.result.specificity},
                           {"ssa", r.result.ssa}});
      }
      out << Json{{"configs", configs},
                  {"slope", fit.slope},
                  {"intercept", fit.intercept},
                  {"r_squared", fit.r_squared}}
                 .dump()
          << '\n';
      return kExitOk;
    }
    out << "config\tperplexity\tturns\tsensibleness\tspecificity\tssa\n";
    for (const auto& r : rows) {
      out << r.id << '\t' << format_number(r.perplexity) << '\t' << r.result.n_turns << '\t'
          << percent(r.result.sensibleness) << '\t' << percent(r.result.specificity) << '\t'
          << percent(r.result.ssa) << '\n';
    }
    char r2[32];
    std::snprintf(r2, sizeof r2, "%.3f", fit.r_squared);
    out << "slope\t" << format_number(fit.slope) << '\n'
        << "intercept\t" << format_number(fit.intercept) << '\n'
        << "R^2\t" << r2 << '\n';
    return kExitOk;
  }
};

struct ServeCmd {
  std::string registry, log = "events.jsonl", host = "127.0.0.1", token;
  int port = 8080;
  std::uint64_t seed = 0;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("serve", "Run the evaluation service");
    c->add_option("--registry", registry, "Model registry JSON")->check(CLI::ExistingFile);
    c->add_option("--log", log, "Event log")->capture_default_str();
    c->add_option("--host", host)->capture_default_str();
    c->add_option("--port", port, "0 picks a free port")->capture_default_str();
    c->add_option("--token", token, "Require this bearer token");
    c->add_option("--seed", seed, "Base seed for session seeds")->required();
  }

  int run(std::ostream& out) {
    ModelRegistry models = registry.empty() ? ModelRegistry{} : ModelRegistry::from_file(registry);
    SessionService service(std::move(models), log, seed);
    ServerOptions opts{host, port, token.empty() ? std::nullopt : std::optional(token)};
    HttpServer server(service, opts);

    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    const int bound = server.bind();
    out << "listening\t" << host << ':' << bound << '\n';
    if (service.torn_lines()) out << "dropped torn lines\t" << service.torn_lines() << '\n';
    out.flush();
    std::thread waiter([&] {
      int sig = 0;
      sigwait(&set, &sig);
      server.stop();
    });
    server.listen();
    // Wakes the waiter when the server stopped on its own.
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    pthread_sigmask(SIG_UNBLOCK, &set, nullptr);
    return kExitOk;
  }
};

void report(std::ostream& err, const std::string& code, const std::string& detail) {
  err << Json{{"error", code}, {"detail", detail}}.dump() << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Dialogue model toolkit: corpus mining, decoding and human evaluation", "dialogkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a TOML/INI file", false);

  MineCmd mine_cmd;
  BpeTrainCmd bpe_cmd;
  TrainLmCmd train_cmd;
  PplCmd ppl_cmd;
  ChatCmd chat_cmd;
  EvalStaticCmd static_cmd;
  ScoreCmd score_cmd;
  CorrelateCmd corr_cmd;
  ServeCmd serve_cmd;
  mine_cmd.add(app);
  bpe_cmd.add(app);
  train_cmd.add(app);
  ppl_cmd.add(app);
  chat_cmd.add(app);
  static_cmd.add(app);
  score_cmd.add(app);
  corr_cmd.add(app);
  serve_cmd.add(app);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    report(err, "usage", msg);
    return kExitUsage;
  }

  try {
    const auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "mine") return mine_cmd.run(out, err);
    if (name == "bpe-train") return bpe_cmd.run(out);
    if (name == "train-lm") return train_cmd.run(out);
    if (name == "ppl") return ppl_cmd.run(out);
    if (name == "chat") return chat_cmd.run(in, out);
    if (name == "eval-static") return static_cmd.run(out);
    if (name == "score") return score_cmd.run(out);
    if (name == "correlate") return corr_cmd.run(out);
    if (name == "serve") return serve_cmd.run(out);
    report(err, "usage", "unknown subcommand " + name);
    return kExitUsage;
  } catch (const CliError& e) {
    report(err, e.code, e.what());
    return e.exit_code;
  } catch (const FormatError& e) {
    report(err, e.code(), e.what());
    return kExitFailure;
  } catch (const DegenerateError& e) {
    report(err, "degenerate", e.what());
    return kExitFailure;
  } catch (const std::invalid_argument& e) {
    report(err, "invalid_argument", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    report(err, "failure", e.what());
    return kExitFailure;
  }
}

}  // namespace dialogkit
