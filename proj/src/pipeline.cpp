#include "topiccards/pipeline.h"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "topiccards/assignment.h"
#include "topiccards/corpus.h"
#include "topiccards/digest.h"
#include "topiccards/judge.h"
#include "topiccards/topic_cards.h"

namespace topiccards {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr Stage kStageOrder[] = {Stage::sample, Stage::generate, Stage::topics,
                                 Stage::assign, Stage::judge,    Stage::report};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string() + "; run the earlier stages first");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Write-then-rename so an interrupted stage never leaves a complete-looking artifact.
void write_file(const fs::path& path, std::string_view content) {
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
  }
  fs::rename(tmp, path);
}

std::string pretty(const ojson& j) { return j.dump(2) + "\n"; }

BackendConfig backend_from_json(const nlohmann::json& j, const std::string& role) {
  BackendConfig b;
  b.model = model_config_from_json(j, b.model);
  if (j.contains("mock_script") && j["mock_script"].is_string()) b.mock_script = j["mock_script"].get<std::string>();
  if (const auto it = j.find("backend"); it != j.end()) {
    const auto kind = it->get<std::string>();
    if (kind == "mock") {
      b.kind = BackendKind::mock;
    } else if (kind == "live") {
      b.kind = BackendKind::live;
    } else {
      throw ConfigError(role + ": backend must be \"live\" or \"mock\", got \"" + kind + "\"");
    }
  } else {
    const bool has_mock = !b.mock_script.empty();
    const bool has_live = !b.model.endpoint_url.empty();
    if (has_mock == has_live) {
      throw ConfigError(role + ": select exactly one backend (set \"backend\", or one of mock_script / endpoint_url)");
    }
    b.kind = has_mock ? BackendKind::mock : BackendKind::live;
  }
  return b;
}

ojson backend_to_json(const BackendConfig& b) {
  ojson j;
  j["backend"] = b.kind == BackendKind::mock ? "mock" : "live";
  j["mock_script"] = b.mock_script.string();
  const auto model = to_json(b.model);
  for (const auto& [key, value] : model.items()) j[key] = value;
  return j;
}

void validate_backend(const BackendConfig& b, const std::string& role) {
  b.model.validate();
  if (b.kind == BackendKind::mock) {
    if (b.mock_script.empty()) throw ConfigError(role + ": mock backend needs a mock_script");
    if (!fs::exists(b.mock_script)) throw ConfigError(role + ": mock script " + b.mock_script.string() + " not found");
    return;
  }
  if (b.model.endpoint_url.empty()) throw ConfigError(role + ": live backend needs an endpoint_url");
  if (b.model.model_name.empty()) throw ConfigError(role + ": live backend needs a model name");
  if (!b.model.api_key_env.empty()) {
    const char* key = std::getenv(b.model.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw ConfigError(role + ": environment variable " + b.model.api_key_env + " is not set");
    }
  }
}

std::shared_ptr<Backend> make_backend(const BackendConfig& b) {
  if (b.kind == BackendKind::mock) return mock_backend(MockScript::load(b.mock_script));
  return std::make_shared<HttpBackend>();
}

void resolve_relative(fs::path& p, const fs::path& base) {
  if (!p.empty() && p.is_relative()) p = (base / p).lexically_normal();
}

class Run {
 public:
  Run(const RunConfig& config, const PipelineOptions& options) : config_(config), options_(options) {}

  RunResult execute() {
    fs::create_directories(config_.out_dir);
    log_.open(config_.out_dir / artifacts::run_log, std::ios::app);
    check_manifest();

    RunResult result{config_.out_dir, {}};
    for (const auto stage : kStageOrder) {
      if (std::find(options_.stages.begin(), options_.stages.end(), stage) == options_.stages.end()) continue;
      const auto artifact = config_.out_dir / artifact_for(stage);
      if (std::find(options_.force.begin(), options_.force.end(), stage) != options_.force.end()) {
        fs::remove(artifact);
      }
      if (fs::exists(artifact)) {
        log("stage " + to_string(stage) + ": skipped, " + std::string(artifact_for(stage)) + " exists");
        result.stages.push_back({stage, false});
        continue;
      }
      if (stage == Stage::judge && !config_.judge) {
        log("stage judge: skipped, no judge configured");
        result.stages.push_back({stage, false});
        continue;
      }
      try {
        run_stage(stage);
      } catch (const std::exception& e) {
        log("stage " + to_string(stage) + ": failed: " + e.what());
        throw StageError(stage, exit_code_for(e), e.what());
      }
      log("stage " + to_string(stage) + ": done");
      result.stages.push_back({stage, true});
    }
    return result;
  }

 private:
  void log(const std::string& line) { log_ << line << '\n' << std::flush; }

  fs::path path(std::string_view name) const { return config_.out_dir / name; }

  void check_manifest() {
    const auto manifest_path = path(artifacts::manifest);
    if (fs::exists(manifest_path)) {
      const auto previous = nlohmann::json::parse(read_file(manifest_path), nullptr, false);
      if (!previous.is_discarded() && previous.value("config_digest", std::string()) != config_.digest()) {
        log("warning: run directory was created with a different configuration; existing artifacts are reused");
      }
    }
    ojson manifest;
    manifest["format"] = 1;
    manifest["config_digest"] = config_.digest();
    manifest["seed"] = config_.sampling.seed;
    manifest["config"] = config_.to_json();
    write_file(manifest_path, pretty(manifest));
  }

  const Corpus& corpus() {
    if (!corpus_) {
      auto loaded = load_corpus(config_.corpus);
      if (config_.max_words > 0) {
        std::vector<Document> docs;
        std::size_t cut = 0;
        for (const auto& doc : loaded.documents()) {
          docs.push_back(enforce_unit_length(doc, config_.max_words));
          if (docs.back().truncated) {
            ++cut;
            log("truncated document " + doc.id + " to " + std::to_string(config_.max_words) + " words");
          }
        }
        if (cut > 0) loaded = Corpus::from_documents(std::move(docs));
      }
      corpus_ = std::make_unique<Corpus>(std::move(loaded));
      matcher_ = std::make_unique<KeywordMatcher>(*corpus_);
    }
    return *corpus_;
  }

  const KeywordMatcher& matcher() {
    corpus();
    return *matcher_;
  }

  Gateway gateway(const BackendConfig& backend, const std::shared_ptr<Backend>& override_backend) const {
    return Gateway(backend.model, override_backend ? override_backend : make_backend(backend),
                   path(artifacts::raw_dir));
  }

  TopicSet load_topics() const {
    return topic_set_from_json(nlohmann::json::parse(read_file(path(artifacts::topics))));
  }

  void run_stage(Stage stage) {
    switch (stage) {
      case Stage::sample: return stage_sample();
      case Stage::generate: return stage_generate();
      case Stage::topics: return stage_topics();
      case Stage::assign: return stage_assign();
      case Stage::judge: return stage_judge();
      case Stage::report: return stage_report();
    }
  }

  void stage_sample() {
    const auto block = draw_sample(corpus(), config_.sampling);
    log("sampled " + std::to_string(block.doc_ids.size()) + " documents, " +
        std::to_string(block.estimated_tokens) + " estimated tokens");
    write_file(path(artifacts::sample), pretty(to_json(block)));
  }

  void stage_generate() {
    const auto sample = sample_block_from_json(nlohmann::json::parse(read_file(path(artifacts::sample))));
    const auto gw = gateway(config_.generation, options_.generation_backend);
    auto request = build_generation_prompt(sample);
    request.temperature = gw.config().temperature;
    request.max_output_tokens = gw.config().max_output_tokens;
    const auto response = gw.complete(request);
    if (response.truncated()) log("warning: generation output was cut off at the token limit");
    write_file(path(artifacts::raw_generation), response.text);
  }

  void stage_topics() {
    const auto raw = read_file(path(artifacts::raw_generation));
    auto set = parse_topic_cards(raw);
    const auto sample = sample_block_from_json(nlohmann::json::parse(read_file(path(artifacts::sample))));
    set.provenance = {config_.generation.model.model_name, sample.sample_id(), sha256_hex(raw)};

    const auto report = validate_topic_set(set, corpus());
    write_file(path(artifacts::validation), pretty(to_json(report)));
    log("validation: " + std::to_string(report.violations.size()) + " violation(s)");
    if (set.usable_count() < kMinTopics) {
      throw ValidationFatal("only " + std::to_string(set.usable_count()) +
                            " usable topic card(s); at least 3 are required");
    }
    write_file(path(artifacts::topics), pretty(to_json(set)));
  }

  void stage_assign() {
    const auto set = load_topics();
    const auto assignment = assign_documents(matcher(), set, config_.threshold_m);
    write_file(path(artifacts::assignment), to_jsonl(assignment));
  }

  void stage_judge() {
    const auto set = load_topics();
    const auto gw = gateway(*config_.judge, options_.judge_backend);
    const auto outcomes = judge_topics(gw, set);
    std::string lines;
    std::size_t scored = 0;
    for (const auto& o : outcomes) {
      if (o.score) {
        lines += to_json(*o.score).dump() + "\n";
        ++scored;
      } else {
        ojson failed;
        failed["topic"] = o.topic;
        failed["error"] = o.error;
        lines += failed.dump() + "\n";
        log("judge: topic " + std::to_string(o.topic) + " not scored: " + o.error);
      }
    }
    if (scored == 0) {
      const auto first = std::find_if(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.exception != nullptr; });
      if (first != outcomes.end()) std::rethrow_exception(first->exception);
      throw Error("judge produced no scores");
    }
    write_file(path(artifacts::judge), lines);
  }

  void stage_report() {
    const auto set = load_topics();
    const auto assignment = assignment_from_jsonl(read_file(path(artifacts::assignment)));
    auto inputs = evaluate(matcher(), set, assignment, config_.metrics);

    if (fs::exists(path(artifacts::judge))) {
      std::vector<JudgeScore> scores;
      std::istringstream in(read_file(path(artifacts::judge)));
      for (std::string line; std::getline(in, line);) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        if (!j.contains("error")) scores.push_back(judge_score_from_json(j));
      }
      if (!scores.empty()) inputs.judge = aggregate_scores(scores);
    }

    auto& meta = inputs.metadata;
    meta["model"] = set.provenance.model;
    meta["sample_id"] = set.provenance.sample_id;
    meta["seed"] = config_.sampling.seed;
    meta["config_digest"] = config_.digest();
    meta["npmi_top_n"] = config_.metrics.top_n;
    meta["diversity_top_k"] = config_.metrics.top_k;
    meta["npmi_eps"] = config_.metrics.eps;
    meta["judge_model"] = config_.judge ? ojson(config_.judge->model.model_name) : ojson(nullptr);
    meta["judge_rubric"] = kJudgeRubricVersion;
    meta["judge_saw_keywords"] = true;

    const auto report = build_report(inputs);
    write_file(path(artifacts::report_csv), csv_header() + "\n" + to_csv_row(report) + "\n");
    write_file(path(artifacts::report), pretty(to_json(report)));
  }

  const RunConfig& config_;
  const PipelineOptions& options_;
  std::ofstream log_;
  std::unique_ptr<Corpus> corpus_;
  std::unique_ptr<KeywordMatcher> matcher_;
};

}  // namespace

RunConfig::RunConfig() {
  sampling.budget_tokens = 32000;
  generation.model.model_name = "mock";
}

void RunConfig::validate() const {
  if (corpus.empty()) throw ConfigError("no corpus path given");
  if (!fs::exists(corpus)) throw ConfigError("corpus " + corpus.string() + " not found");
  if (out_dir.empty()) throw ConfigError("no output directory given");
  if (sampling.budget_tokens <= sampling.overhead_tokens) {
    throw ConfigError("budget_tokens must exceed overhead_tokens (" + std::to_string(sampling.overhead_tokens) + ")");
  }
  if (!(sampling.token_ratio > 0.0)) throw ConfigError("token_ratio must be positive");
  if (threshold_m < 1) throw ConfigError("threshold_m must be at least 1");
  if (metrics.top_n < 2) throw ConfigError("top_n must be at least 2");
  if (metrics.top_k < 1) throw ConfigError("top_k must be at least 1");
  if (!(metrics.eps > 0.0)) throw ConfigError("eps must be positive");
  validate_backend(generation, "generation");
  if (judge) validate_backend(*judge, "judge");
}

std::string RunConfig::digest() const {
  auto j = to_json();
  j.erase("out");
  return sha256_hex(j.dump());
}

nlohmann::ordered_json RunConfig::to_json() const {
  ojson j;
  j["corpus"] = corpus.string();
  j["out"] = out_dir.string();
  j["max_words"] = max_words;
  j["sampling"] = topiccards::to_json(sampling);
  j["generation"] = backend_to_json(generation);
  j["judge"] = judge ? backend_to_json(*judge) : ojson(nullptr);
  j["assignment"] = {{"threshold_m", threshold_m}};
  j["metrics"] = {{"top_n", metrics.top_n},
                  {"top_k", metrics.top_k},
                  {"eps", metrics.eps},
                  {"salience", to_string(metrics.salience)}};
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& input) {
  const auto& j = input.contains("config_digest") && input.contains("config") ? input.at("config") : input;
  if (!j.is_object()) throw ConfigError("run configuration must be a JSON object");
  RunConfig c;
  try {
    c.corpus = j.value("corpus", std::string());
    c.out_dir = j.value("out", std::string());
    c.max_words = j.value("max_words", c.max_words);
    if (j.contains("sampling")) {
      auto plan = sampling_plan_from_json(j.at("sampling"));
      if (!j.at("sampling").contains("budget_tokens")) plan.budget_tokens = c.sampling.budget_tokens;
      c.sampling = plan;
    }
    if (j.contains("generation")) c.generation = backend_from_json(j.at("generation"), "generation");
    if (j.contains("judge") && !j.at("judge").is_null()) c.judge = backend_from_json(j.at("judge"), "judge");
    if (j.contains("assignment")) c.threshold_m = j.at("assignment").value("threshold_m", c.threshold_m);
    if (j.contains("metrics")) {
      const auto& m = j.at("metrics");
      c.metrics.top_n = m.value("top_n", c.metrics.top_n);
      c.metrics.top_k = m.value("top_k", c.metrics.top_k);
      c.metrics.eps = m.value("eps", c.metrics.eps);
      if (m.contains("salience")) c.metrics.salience = parse_salience_scheme(m.at("salience").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid run configuration: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  auto config = from_json(j);
  const auto base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  resolve_relative(config.corpus, base);
  resolve_relative(config.out_dir, base);
  resolve_relative(config.generation.mock_script, base);
  if (config.judge) resolve_relative(config.judge->mock_script, base);
  return config;
}

std::string to_string(Stage stage) {
  switch (stage) {
    case Stage::sample: return "sample";
    case Stage::generate: return "generate";
    case Stage::topics: return "topics";
    case Stage::assign: return "assign";
    case Stage::judge: return "judge";
    case Stage::report: return "report";
  }
  return "unknown";
}

std::string_view artifact_for(Stage stage) {
  switch (stage) {
    case Stage::sample: return artifacts::sample;
    case Stage::generate: return artifacts::raw_generation;
    case Stage::topics: return artifacts::topics;
    case Stage::assign: return artifacts::assignment;
    case Stage::judge: return artifacts::judge;
    case Stage::report: return artifacts::report;
  }
  return {};
}

ExitCode exit_code_for(const std::exception& error) {
  if (const auto* stage = dynamic_cast<const StageError*>(&error)) return stage->code();
  if (dynamic_cast<const ConfigError*>(&error)) return ExitCode::config;
  if (dynamic_cast<const ParseFailure*>(&error)) return ExitCode::parse;
  if (dynamic_cast<const LlmError*>(&error)) return ExitCode::network;
  if (dynamic_cast<const ValidationFatal*>(&error)) return ExitCode::validation_fatal;
  return ExitCode::internal;
}

bool RunResult::executed(Stage stage) const {
  return std::any_of(stages.begin(), stages.end(), [&](const auto& s) { return s.stage == stage && s.executed; });
}

RunResult run_pipeline(const RunConfig& config, const PipelineOptions& options) {
  config.validate();
  return Run(config, options).execute();
}

}  // namespace topiccards
