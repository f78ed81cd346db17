#include "reliasql/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <thread>

#include <nlohmann/json.hpp>

#include "reliasql/corpus_analyzer.hpp"
#include "reliasql/error.hpp"

namespace reliasql {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  if (path.is_relative() && !base.empty()) return (base / path).lexically_normal();
  return path;
}

std::optional<fs::path> opt_path(const json& j, const char* key, const fs::path& base) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return resolve(base, j[key].get<std::string>());
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}


json opt_json(const std::optional<fs::path>& p) { return p ? json(p->string()) : json(nullptr); }

fs::path default_prompts_dir() {
  if (const char* env = std::getenv("RELIASQL_PROMPTS_DIR"); env && *env) return env;
#ifdef RELIASQL_DEFAULT_DATA_DIR
  return fs::path(RELIASQL_DEFAULT_DATA_DIR) / "prompts";
#else
  return "prompts";
#endif
}

MissPolicy miss_policy_from_string(const std::string& text) {
  std::string t = to_lower(text);
  if (t == "strict") return MissPolicy::Strict;
  if (t == "empty") return MissPolicy::Empty;
  throw ConfigError("unknown miss policy: " + text);
}

std::string_view mode_name(GatewayMode m) {
  switch (m) {
    case GatewayMode::Live: return "live";
    case GatewayMode::Replay: return "replay";
    case GatewayMode::Stub: return "stub";
  }
  return "stub";
}

std::string generation_text(const QuestionRecord& q) { return q.working_text(); }

void warn(const std::string& id, const std::string& what) {
  std::cerr << "reliasql: question " << id << ": " << what << "\n";
}

}  // namespace

int PipelineConfig::effective_jobs() const {
  int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  int j = jobs > 0 ? jobs : hw;
  if (jobs <= 0 && gateway.mode == GatewayMode::Live) j = std::min(j, 8);
  return std::max(1, j);
}

PipelineConfig parse_pipeline_config(const std::string& json_text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  PipelineConfig c;
  c.prompts_dir = default_prompts_dir();
  try {
    if (auto p = opt_path(j, "questions", base_dir)) c.questions = *p;
    c.labels = opt_path(j, "labels", base_dir);
    if (auto p = opt_path(j, "database", base_dir)) c.database = *p;
    if (auto p = opt_path(j, "catalog", base_dir)) c.catalog = *p;
    if (auto p = opt_path(j, "output", base_dir)) c.output = *p;
    if (auto p = opt_path(j, "prompts", base_dir)) c.prompts_dir = *p;
    c.lexicons = opt_path(j, "lexicons", base_dir);
    c.train_questions = opt_path(j, "train_questions", base_dir);
    c.train_labels = opt_path(j, "train_labels", base_dir);
    c.unanswerable_vocab = opt_path(j, "unanswerable_vocab", base_dir);
    c.stub_rules = opt_path(j, "stub_rules", base_dir);

    if (j.contains("stages")) {
      const json& s = j["stages"];
      read_if(s, "templatize", c.toggles.templatize);
      read_if(s, "reflect", c.toggles.reflect);
      read_if(s, "verify", c.toggles.verify);
      read_if(s, "ensemble", c.toggles.ensemble);
      read_if(s, "patient_id_gate", c.toggles.gates.patient_id);
      read_if(s, "vocabulary_gate", c.toggles.gates.vocabulary);
    }
    if (j.contains("gateway")) {
      const json& g = j["gateway"];
      if (g.contains("mode")) c.gateway.mode = gateway_mode_from_string(g["mode"].get<std::string>());
      read_if(g, "endpoint", c.gateway.endpoint);
      read_if(g, "credential_env", c.gateway.credential_env);
      c.gateway.cache_path = opt_path(g, "cache", base_dir);
      if (g.contains("miss_policy")) c.gateway.miss_policy = miss_policy_from_string(g["miss_policy"].get<std::string>());
      read_if(g, "max_retries", c.gateway.max_retries);
      if (g.contains("backoff_ms")) c.gateway.backoff_initial = std::chrono::milliseconds(g["backoff_ms"].get<int>());
      if (g.contains("rate_interval_ms"))
        c.gateway.rate_interval = std::chrono::milliseconds(g["rate_interval_ms"].get<int>());
    }
    if (j.contains("generation")) {
      const json& g = j["generation"];
      if (g.contains("format")) c.generation.format = render_format_from_string(g["format"].get<std::string>());
      read_if(g, "few_shot_k", c.generation.few_shot_k);
      if (g.contains("temperature") && !g["temperature"].is_null())
        c.generation.temperature = g["temperature"].get<double>();
      read_if(g, "ensemble_size", c.generation.ensemble_size);
      read_if(g, "fine_tuned", c.generation.fine_tuned_backend);
      read_if(g, "model", c.generation.model_tag);
      read_if(g, "max_output_tokens", c.generation.max_output_tokens);
    }
    if (j.contains("embedding")) {
      const json& e = j["embedding"];
      read_if(e, "provider", c.embedding.provider);
      read_if(e, "dim", c.embedding.dim);
      read_if(e, "endpoint", c.embedding.endpoint);
      read_if(e, "model", c.embedding.model);
    }
    if (j.contains("templatize")) {
      const json& t = j["templatize"];
      read_if(t, "model", c.templatize_options.model_tag);
      read_if(t, "k", c.template_k);
      read_if(t, "embed_raw_text", c.embed_raw_text);
    }
    if (j.contains("alignment")) read_if(j["alignment"], "model", c.alignment_options.model_tag);
    if (j.contains("vote")) c.vote_mode = vote_mode_from_string(j["vote"].get<std::string>());
    if (j.contains("penalties")) {
      const json& p = j["penalties"];
      if (p.is_string()) {
        c.penalties = parse_penalties(p.get<std::string>());
      } else {
        std::string joined;
        for (const auto& item : p) {
          if (!joined.empty()) joined += ",";
          joined += item.is_string() ? item.get<std::string>() : item.dump();
        }
        c.penalties = parse_penalties(joined);
      }
    }
    read_if(j, "timeout_ms", c.timeout_ms);
    read_if(j, "seed", c.seed);
    read_if(j, "jobs", c.jobs);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  c.generation.reflect = c.toggles.reflect;
  return c;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return parse_pipeline_config(text, path.parent_path());
}

std::string config_json(const PipelineConfig& c) {
  json penalties = json::array();
  for (const auto& p : c.penalties) penalties.push_back(p.label);
  json j = {
      {"questions", c.questions.string()},
      {"labels", opt_json(c.labels)},
      {"database", c.database.string()},
      {"catalog", c.catalog.string()},
      {"output", c.output.string()},
      {"prompts", c.prompts_dir.string()},
      {"lexicons", opt_json(c.lexicons)},
      {"train_questions", opt_json(c.train_questions)},
      {"train_labels", opt_json(c.train_labels)},
      {"unanswerable_vocab", opt_json(c.unanswerable_vocab)},
      {"stub_rules", opt_json(c.stub_rules)},
      {"stages",
       {{"templatize", c.toggles.templatize},
        {"reflect", c.toggles.reflect},
        {"verify", c.toggles.verify},
        {"ensemble", c.toggles.ensemble},
        {"patient_id_gate", c.toggles.gates.patient_id},
        {"vocabulary_gate", c.toggles.gates.vocabulary}}},
      {"gateway",
       {{"mode", mode_name(c.gateway.mode)},
        {"endpoint", c.gateway.endpoint},
        {"credential_env", c.gateway.credential_env},
        {"cache", opt_json(c.gateway.cache_path)},
        {"miss_policy", c.gateway.miss_policy == MissPolicy::Strict ? "strict" : "empty"},
        {"max_retries", c.gateway.max_retries},
        {"backoff_ms", c.gateway.backoff_initial.count()},
        {"rate_interval_ms", c.gateway.rate_interval.count()}}},
      {"generation",
       {{"format", to_string(c.generation.format)},
        {"few_shot_k", c.generation.few_shot_k},
        {"temperature", c.generation.effective_temperature()},
        {"ensemble_size", c.generation.ensemble_size},
        {"fine_tuned", c.generation.fine_tuned_backend},
        {"model", c.generation.model_tag},
        {"max_output_tokens", c.generation.max_output_tokens}}},
      {"embedding",
       {{"provider", c.embedding.provider},
        {"dim", c.embedding.dim},
        {"endpoint", c.embedding.endpoint},
        {"model", c.embedding.model}}},
      {"templatize",
       {{"model", c.templatize_options.model_tag}, {"k", c.template_k}, {"embed_raw_text", c.embed_raw_text}}},
      {"alignment", {{"model", c.alignment_options.model_tag}}},
      {"vote", to_string(c.vote_mode)},
      {"penalties", penalties},
      {"timeout_ms", c.timeout_ms},
      {"seed", c.seed},
  };
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// candidate stage files

std::string serialize_candidates(const CandidateMap& candidates) {
  json j = json::object();
  for (const auto& [id, list] : candidates) {
    json arr = json::array();
    for (const auto& c : list) {
      arr.push_back({{"member", c.member_index},
                     {"stage", to_string(c.stage)},
                     {"sql", c.prediction.to_text()},
                     {"notes", c.notes}});
    }
    j[id] = std::move(arr);
  }
  return j.dump(2) + "\n";
}

void write_candidates(const fs::path& path, const CandidateMap& candidates) {
  write_text_file(path, serialize_candidates(candidates));
}

CandidateMap load_candidates(const fs::path& path) {
  std::string text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("candidates file: ") + e.what(), e.byte);
  }
  if (!j.is_object()) throw ValidationError("candidates file must hold an object");
  CandidateMap out;
  try {
    for (const auto& [id, arr] : j.items()) {
      auto& list = out[id];
      for (const auto& item : arr) {
        Candidate c;
        c.member_index = item.at("member").get<int>();
        c.stage = stage_from_string(item.at("stage").get<std::string>());
        c.prediction = SqlOrNull::from_text(item.at("sql").get<std::string>());
        if (item.contains("notes")) c.notes = item["notes"].get<std::string>();
        list.push_back(std::move(c));
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("candidates file: ") + e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(err_mu);
          if (!first_error) first_error = std::current_exception();
          next.store(n);
          return;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// resources

PipelineResources::PipelineResources(const PipelineConfig& config, std::shared_ptr<Transport> transport)
    : config_(config) {
  if (config_.catalog.empty()) throw ConfigError("no catalog path configured");
  try {
    catalog_ = load_catalog(config_.catalog);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  prompts_ = load_prompt_templates(config_.prompts_dir);
  config_.generation.reflect = config_.toggles.reflect;
  validate(config_.generation);

  GatewayConfig gw = config_.gateway;
  if (config_.stub_rules) gw.stub_rules = load_stub_rules(*config_.stub_rules);
  if (config_.embedding.provider == "remote") {
    if (!transport) transport = std::make_shared<HttpTransport>();
    embedder_ = std::make_unique<RemoteEmbedder>(transport, config_.embedding.endpoint, config_.embedding.model,
                                                 config_.gateway.credential_env);
  } else if (config_.embedding.provider == "hashing") {
    embedder_ = std::make_unique<HashingEmbedder>(config_.embedding.dim);
  } else {
    throw ConfigError("unknown embedding provider: " + config_.embedding.provider);
  }
  gateway_ = std::make_unique<LlmGateway>(std::move(gw), std::move(transport));
  lexicons_ = config_.lexicons ? load_lexicons(*config_.lexicons) : Lexicons::defaults();

  if (config_.unanswerable_vocab) {
    json j = json::parse(read_text_file(*config_.unanswerable_vocab));
    vocab_.emplace();
    for (const auto& t : j) vocab_->insert(t.get<std::string>());
  } else if (config_.toggles.gates.vocabulary) {
    throw ConfigError("the vocabulary gate needs an unanswerable_vocab file");
  }
}

void PipelineResources::load_training() {
  if (training_) return;
  if (!config_.train_questions) throw ConfigError("no training questions configured (needed for templates and few-shot examples)");
  training_ = load_dataset(*config_.train_questions, config_.train_labels, "train");
}

const ValueIndex& PipelineResources::value_index() {
  std::lock_guard lock(lazy_mu_);
  if (!value_index_) {
    Database db = Database::open(config_.database);
    value_index_ = ValueIndex::build(db, catalog_);
  }
  return *value_index_;
}

const TemplateIndex& PipelineResources::template_index() {
  std::lock_guard lock(lazy_mu_);
  if (!template_index_) {
    load_training();
    TemplateIndex index;
    for (const auto& q : training_->questions) {
      std::string masked = q.masked_text ? *q.masked_text : mask_values(q.raw_text, lexicons_).masked_text;
      index.add(TemplateEntry{masked, embedder_->embed(masked), q.id});
    }
    template_index_ = std::move(index);
  }
  return *template_index_;
}

std::vector<FewShotExample> PipelineResources::few_shot_for(const std::string& question) {
  std::size_t k = config_.generation.few_shot_k;
  if (k == 0) return {};
  {
    std::lock_guard lock(lazy_mu_);
    if (!question_index_) {
      load_training();
      if (!training_->labels) throw ConfigError("few-shot examples need training labels");
      TemplateIndex index;
      for (const auto& q : training_->questions) {
        if (!training_->labels->count(q.id)) continue;
        index.add(TemplateEntry{q.raw_text, embedder_->embed(q.raw_text), q.id});
      }
      if (index.size() < k) throw ConfigError("training pool smaller than few_shot_k");
      question_index_ = std::move(index);
    }
  }
  std::vector<FewShotExample> out;
  for (const auto& n : nearest_templates(embedder_->embed(question), *question_index_, k)) {
    const auto& entry = question_index_->entries()[n.entry_index];
    out.push_back({entry.text, training_->labels->at(entry.source_id).answer.to_text()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// stages

std::vector<QuestionRecord> run_templatize_stage(const std::vector<QuestionRecord>& questions, PipelineResources& res) {
  const auto& cfg = res.config();
  const TemplateIndex& index = res.template_index();
  std::vector<QuestionRecord> out(questions.size());
  parallel_for(questions.size(), cfg.effective_jobs(), [&](std::size_t i) {
    QuestionRecord rec = questions[i];
    try {
      MaskResult masked = mask_values(rec.raw_text, res.lexicons());
      rec.masked_text = masked.masked_text;
      rec.bindings = masked.bindings;
      const std::string& probe = cfg.embed_raw_text ? rec.raw_text : *rec.masked_text;
      std::vector<std::string> neighbors;
      if (!index.empty()) {
        for (const auto& n : nearest_templates(res.embedder().embed(probe), index, cfg.template_k))
          neighbors.push_back(n.text);
      }
      rec.templated_text = templatize(rec, neighbors, res.gateway(), res.prompts(), cfg.templatize_options);
    } catch (const Error& e) {
      warn(rec.id, std::string("templatize failed, keeping raw text: ") + e.what());
      rec = questions[i];
    }
    out[i] = std::move(rec);
  });
  return out;
}

CandidateMap run_generate_stage(const std::vector<QuestionRecord>& questions, PipelineResources& res) {
  const auto& cfg = res.config();
  GenerationConfig gen = cfg.generation;
  gen.reflect = cfg.toggles.reflect;
  if (!cfg.toggles.ensemble) gen.ensemble_size = 1;
  std::vector<std::vector<Candidate>> out(questions.size());
  parallel_for(questions.size(), cfg.effective_jobs(), [&](std::size_t i) {
    const auto& q = questions[i];
    std::string text = generation_text(q);
    std::vector<FewShotExample> few_shot = gen.fine_tuned_backend ? std::vector<FewShotExample>{} : res.few_shot_for(text);
    try {
      out[i] = generate(text, res.catalog(), gen, res.gateway(), few_shot, res.prompts());
    } catch (const Error& e) {
      warn(q.id, std::string("generation failed: ") + e.what());
      Candidate c;
      c.add_note(std::string("generation failed: ") + e.what());
      out[i] = {c};
    }
  });
  CandidateMap map;
  for (std::size_t i = 0; i < questions.size(); ++i) map[questions[i].id] = std::move(out[i]);
  return map;
}

CandidateMap run_verify_stage(const std::vector<QuestionRecord>& questions, const CandidateMap& candidates,
                              PipelineResources& res) {
  const auto& cfg = res.config();
  if (cfg.database.empty()) throw ConfigError("no database path configured");
  Database::open(cfg.database).handle();  // fail early on a missing file
  const ValueIndex& values = res.value_index();
  std::vector<std::vector<Candidate>> out(questions.size());
  std::mutex db_mu;
  std::map<std::thread::id, std::shared_ptr<Database>> connections;
  auto connection = [&]() -> const Database& {
    std::lock_guard lock(db_mu);
    auto& slot = connections[std::this_thread::get_id()];
    if (!slot) slot = std::make_shared<Database>(Database::open(cfg.database));
    return *slot;
  };
  parallel_for(questions.size(), cfg.effective_jobs(), [&](std::size_t i) {
    const auto& q = questions[i];
    auto it = candidates.find(q.id);
    if (it == candidates.end()) return;
    VerifyContext ctx{connection(), res.catalog(), values, cfg.toggles.gates, res.unanswerable_vocab(), cfg.timeout_ms};
    for (const auto& c : it->second) {
      try {
        out[i].push_back(verify_candidate(c, q, ctx));
      } catch (const std::exception& e) {
        warn(q.id, std::string("verification failed: ") + e.what());
        Candidate failed = c;
        failed.prediction = SqlOrNull::null();
        failed.add_note(std::string("verification failed: ") + e.what());
        out[i].push_back(std::move(failed));
      }
    }
  });
  CandidateMap map;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    if (candidates.count(questions[i].id)) map[questions[i].id] = std::move(out[i]);
  }
  return map;
}

PredictionMap run_ensemble_stage(const std::vector<QuestionRecord>& questions, const CandidateMap& candidates,
                                 PipelineResources& res) {
  const auto& cfg = res.config();
  bool by_result = cfg.vote_mode == VoteMode::ByExecutionResult;
  if (by_result && cfg.database.empty()) throw ConfigError("result voting needs a database path");
  std::vector<SqlOrNull> out(questions.size());
  std::mutex db_mu;
  std::map<std::thread::id, std::shared_ptr<Database>> connections;
  auto connection = [&]() -> const Database* {
    if (!by_result) return nullptr;
    std::lock_guard lock(db_mu);
    auto& slot = connections[std::this_thread::get_id()];
    if (!slot) slot = std::make_shared<Database>(Database::open(cfg.database));
    return slot.get();
  };
  parallel_for(questions.size(), cfg.effective_jobs(), [&](std::size_t i) {
    const auto& q = questions[i];
    auto it = candidates.find(q.id);
    if (it == candidates.end() || it->second.empty()) return;

    // The last candidate of each member is its final one.
    std::map<int, SqlOrNull> finals;
    for (const auto& c : it->second) finals[c.member_index] = c.prediction;
    std::vector<SqlOrNull> members;
    for (auto& [m, p] : finals) members.push_back(p);

    if (!cfg.toggles.ensemble) {
      out[i] = members.front();
      return;
    }
    try {
      for (auto& p : members) {
        if (p.is_query() && !alignment_check(generation_text(q), p.sql(), res.gateway(), res.prompts(),
                                             cfg.alignment_options))
          p = SqlOrNull::null();
      }
      out[i] = majority_vote(members, cfg.vote_mode, connection(), cfg.timeout_ms);
    } catch (const std::exception& e) {
      warn(q.id, std::string("ensembling failed: ") + e.what());
      out[i] = SqlOrNull::null();
    }
  });
  PredictionMap map;
  for (std::size_t i = 0; i < questions.size(); ++i) map[questions[i].id] = out[i];
  return map;
}

fs::path sibling_path(const fs::path& output, const std::string& suffix) {
  fs::path p = output;
  p.replace_extension();
  return fs::path(p.string() + suffix);
}

RunResult run_pipeline(const PipelineConfig& config, std::shared_ptr<Transport> transport) {
  if (config.database.empty()) throw ConfigError("no database path configured");
  if (!fs::exists(config.database)) throw ConfigError("database not found: " + config.database.string());
  if (config.questions.empty()) throw ConfigError("no questions path configured");
  if (config.output.empty()) throw ConfigError("no output path configured");

  Dataset ds;
  try {
    ds = load_dataset(config.questions, config.labels, "eval");
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  PipelineResources res(config, std::move(transport));

  std::vector<QuestionRecord> questions = ds.questions;
  if (config.toggles.templatize) questions = run_templatize_stage(questions, res);
  CandidateMap candidates = run_generate_stage(questions, res);
  if (config.toggles.verify) candidates = run_verify_stage(questions, candidates, res);

  RunResult result;
  result.predictions = run_ensemble_stage(questions, candidates, res);
  result.predictions_path = config.output;
  write_predictions(config.output, result.predictions);

  if (ds.labels) {
    Database db = Database::open(config.database);
    result.report = score(result.predictions, *ds.labels, db, config.penalties, config.timeout_ms);
    result.report_path = sibling_path(config.output, ".report.json");
    write_text_file(*result.report_path, report_json(*result.report));
  }

  GatewayStats stats = res.gateway().stats();
  json manifest = {
      {"version", RELIASQL_VERSION},
      {"sqlite_version", sqlite_library_version()},
      {"config", json::parse(config_json(config))},
      {"questions", ds.questions.size()},
      {"gateway",
       {{"cache_hits", stats.cache_hits},
        {"cache_misses", stats.cache_misses},
        {"live_calls", stats.live_calls},
        {"retries", stats.retries},
        {"stub_calls", stats.stub_calls}}},
  };
  result.manifest_path = sibling_path(config.output, ".manifest.json");
  write_text_file(result.manifest_path, manifest.dump(2) + "\n");
  return result;
}

}  // namespace reliasql
