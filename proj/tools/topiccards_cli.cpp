#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "topiccards/pipeline.h"

namespace fs = std::filesystem;
using namespace topiccards;

namespace {

// Values given on the command line; unset ones leave the config file alone.
struct Overrides {
  std::string config;
  std::string corpus;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> budget_tokens;
  std::optional<std::size_t> overhead_tokens;
  std::optional<std::string> strategy;
  std::optional<std::size_t> max_words;
  std::optional<std::string> model;
  std::optional<std::string> endpoint;
  std::optional<std::string> api_key_env;
  std::optional<std::string> mock_script;
  std::optional<double> temperature;
  std::optional<std::size_t> max_in_flight;
  std::optional<std::string> judge_model;
  std::optional<std::string> judge_endpoint;
  std::optional<std::string> judge_api_key_env;
  std::optional<std::string> judge_mock_script;
  bool no_judge = false;
  std::optional<std::size_t> threshold_m;
  std::optional<std::size_t> top_n;
  std::optional<std::size_t> top_k;
  std::optional<double> eps;
  std::optional<std::string> salience;
  bool force = false;
};

void add_shared_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration (or a manifest.json)");
  cmd->add_option("--corpus", o.corpus, "JSONL corpus");
  cmd->add_option("--out", o.out, "Run directory");
  cmd->add_option("--seed", o.seed, "Sampling seed");
  cmd->add_option("--budget-tokens", o.budget_tokens, "Context window budget in tokens");
  cmd->add_option("--overhead-tokens", o.overhead_tokens, "Tokens reserved for prompt and reply");
  cmd->add_option("--strategy", o.strategy, "Sampling strategy")->check(CLI::IsMember({"uniform", "stratified"}));
  cmd->add_option("--max-words", o.max_words, "Truncate documents to this many words (0 = off)");
  cmd->add_option("--model", o.model, "Generation model name");
  cmd->add_option("--endpoint", o.endpoint, "Generation chat-completions URL");
  cmd->add_option("--api-key-env", o.api_key_env, "Environment variable holding the generation API key");
  cmd->add_option("--mock-script", o.mock_script, "Use the mock backend with this script");
  cmd->add_option("--temperature", o.temperature, "Sampling temperature for both models");
  cmd->add_option("--max-in-flight", o.max_in_flight, "Concurrent requests per model");
  cmd->add_option("--judge-model", o.judge_model, "Judge model name");
  cmd->add_option("--judge-endpoint", o.judge_endpoint, "Judge chat-completions URL");
  cmd->add_option("--judge-api-key-env", o.judge_api_key_env, "Environment variable holding the judge API key");
  cmd->add_option("--judge-mock-script", o.judge_mock_script, "Use the mock backend for the judge");
  cmd->add_flag("--no-judge", o.no_judge, "Drop any configured judge");
  cmd->add_option("--threshold-m", o.threshold_m, "Minimum matching keywords per link");
  cmd->add_option("--top-n", o.top_n, "Keywords per topic for NPMI");
  cmd->add_option("--top-k", o.top_k, "Keywords per topic for diversity");
  cmd->add_option("--eps", o.eps, "NPMI smoothing constant");
  cmd->add_option("--salience", o.salience, "Keyword salience scheme")
      ->check(CLI::IsMember({"reciprocal_rank", "uniform"}));
  cmd->add_flag("--force", o.force, "Recompute this command's stages even if their artifacts exist");
}

void apply_backend(BackendConfig& b, const std::optional<std::string>& model, const std::optional<std::string>& endpoint,
                   const std::optional<std::string>& key_env, const std::optional<std::string>& mock_script) {
  if (model) b.model.model_name = *model;
  if (key_env) b.model.api_key_env = *key_env;
  if (endpoint && mock_script) throw ConfigError("give either an endpoint or a mock script, not both");
  if (endpoint) {
    b.kind = BackendKind::live;
    b.model.endpoint_url = *endpoint;
    b.mock_script.clear();
  }
  if (mock_script) {
    b.kind = BackendKind::mock;
    b.mock_script = *mock_script;
  }
}

RunConfig build_config(const Overrides& o) {
  RunConfig c = o.config.empty() ? RunConfig() : RunConfig::load(o.config);
  if (!o.corpus.empty()) c.corpus = o.corpus;
  if (!o.out.empty()) c.out_dir = o.out;
  if (o.seed) c.sampling.seed = *o.seed;
  if (o.budget_tokens) c.sampling.budget_tokens = *o.budget_tokens;
  if (o.overhead_tokens) c.sampling.overhead_tokens = *o.overhead_tokens;
  if (o.strategy) c.sampling.strategy = parse_sampling_strategy(*o.strategy);
  if (o.max_words) c.max_words = *o.max_words;
  apply_backend(c.generation, o.model, o.endpoint, o.api_key_env, o.mock_script);

  const bool judge_flags = o.judge_model || o.judge_endpoint || o.judge_api_key_env || o.judge_mock_script;
  if (o.no_judge) {
    c.judge.reset();
  } else if (judge_flags) {
    if (!c.judge) {
      c.judge = BackendConfig{};
      c.judge->model.model_name = "mock-judge";
    }
    apply_backend(*c.judge, o.judge_model, o.judge_endpoint, o.judge_api_key_env, o.judge_mock_script);
  }
  if (o.temperature) {
    c.generation.model.temperature = *o.temperature;
    if (c.judge) c.judge->model.temperature = *o.temperature;
  }
  if (o.max_in_flight) {
    c.generation.model.max_in_flight = *o.max_in_flight;
    if (c.judge) c.judge->model.max_in_flight = *o.max_in_flight;
  }
  if (o.threshold_m) c.threshold_m = *o.threshold_m;
  if (o.top_n) c.metrics.top_n = *o.top_n;
  if (o.top_k) c.metrics.top_k = *o.top_k;
  if (o.eps) c.metrics.eps = *o.eps;
  if (o.salience) c.metrics.salience = parse_salience_scheme(*o.salience);
  return c;
}

std::vector<Stage> stages_for(const std::string& command) {
  if (command == "sample") return {Stage::sample};
  if (command == "generate") return {Stage::sample, Stage::generate, Stage::topics};
  if (command == "assign") return {Stage::sample, Stage::generate, Stage::topics, Stage::assign};
  if (command == "judge") return {Stage::sample, Stage::generate, Stage::topics, Stage::judge};
  if (command == "eval") return {Stage::sample, Stage::generate, Stage::topics, Stage::assign, Stage::report};
  return {Stage::sample, Stage::generate, Stage::topics, Stage::assign, Stage::judge, Stage::report};
}

// --force only recomputes what the command itself is about.
std::vector<Stage> forced_for(const std::string& command) {
  if (command == "sample") return {Stage::sample};
  if (command == "generate") return {Stage::generate, Stage::topics};
  if (command == "assign") return {Stage::assign};
  if (command == "judge") return {Stage::judge};
  if (command == "eval") return {Stage::report};
  return stages_for(command);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LLM topic cards: sample, generate, assign, judge and evaluate"};
  app.require_subcommand(1);

  Overrides overrides;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"sample", "Draw the budgeted document sample"},
      {"generate", "Prompt the model and parse/validate topic cards"},
      {"assign", "Link documents to topics by keyword matching"},
      {"judge", "Score topic summaries with the judge model"},
      {"eval", "Compute the metrics report"},
      {"run", "Run every stage"},
  };
  for (const auto& [name, help] : commands) add_shared_flags(app.add_subcommand(name, help), overrides);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ExitCode::config);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const auto config = build_config(overrides);
    PipelineOptions options;
    options.stages = stages_for(command);
    if (overrides.force) options.force = forced_for(command);
    const auto result = run_pipeline(config, options);
    for (const auto& s : result.stages) {
      std::cout << to_string(s.stage) << ": " << (s.executed ? "done" : "skipped") << "\n";
    }
    std::cout << "run directory: " << result.dir.string() << "\n";
    return static_cast<int>(ExitCode::success);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(exit_code_for(e));
  }
}
