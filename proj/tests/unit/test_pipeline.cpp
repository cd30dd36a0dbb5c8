#include <gtest/gtest.h>

#include "test_support.h"
#include "topiccards/pipeline.h"

using namespace topiccards;
using test_support::fixture;
using test_support::slurp;
using test_support::TempDir;
namespace fs = std::filesystem;

namespace {

RunConfig mock_config(const fs::path& out) {
  RunConfig c;
  c.corpus = fixture("corpus_1000.jsonl");
  c.out_dir = out;
  c.sampling.seed = 7;
  c.sampling.strategy = SamplingStrategy::stratified;
  c.generation.kind = BackendKind::mock;
  c.generation.mock_script = fixture("mock_generation.json");
  c.generation.model.model_name = "mock-generator";
  BackendConfig judge;
  judge.kind = BackendKind::mock;
  judge.mock_script = fixture("mock_judge.json");
  judge.model.model_name = "mock-judge";
  c.judge = judge;
  return c;
}

std::vector<Stage> executed(const RunResult& r) {
  std::vector<Stage> out;
  for (const auto& s : r.stages) {
    if (s.executed) out.push_back(s.stage);
  }
  return out;
}

ExitCode failure_code(const RunConfig& config, const PipelineOptions& options = {}) {
  try {
    run_pipeline(config, options);
  } catch (const std::exception& e) {
    return exit_code_for(e);
  }
  return ExitCode::success;
}

std::shared_ptr<MockBackend> canned(const std::string& text) {
  MockScript script;
  script.fallback = ScriptedResponse{text, "stop"};
  return mock_backend(script);
}

}  // namespace

TEST(Pipeline, FullMockRunWritesEveryArtifact) {
  TempDir dir;
  const auto result = run_pipeline(mock_config(dir / "run"));
  EXPECT_EQ(executed(result).size(), 6u);
  for (const auto name : {artifacts::manifest, artifacts::sample, artifacts::raw_generation, artifacts::topics,
                          artifacts::validation, artifacts::assignment, artifacts::judge, artifacts::report,
                          artifacts::report_csv, artifacts::run_log}) {
    EXPECT_TRUE(fs::exists(dir / "run" / std::string(name))) << name;
  }
  EXPECT_FALSE(fs::is_empty(dir / "run" / std::string(artifacts::raw_dir)));

  const auto report = nlohmann::json::parse(slurp(dir / "run" / "report.json"));
  EXPECT_FALSE(report["npmi"]["mean"].is_null());
  EXPECT_FALSE(report["diversity"]["value"].is_null());
  EXPECT_FALSE(report["topic_entropy"].is_null());
  EXPECT_EQ(report["word_entropies"].size(), 6u);
  EXPECT_FALSE(report["assignment_accuracy"]["overall"].is_null());
  for (const char* dim : {"coherence", "concise", "informative"}) {
    const double v = report["judge"][dim].get<double>();
    EXPECT_GE(v, 1.0);
    EXPECT_LE(v, 5.0);
  }
  EXPECT_EQ(report["metadata"]["model"], "mock-generator");
  EXPECT_EQ(report["metadata"]["judge_model"], "mock-judge");
}

TEST(Pipeline, RepeatedRunsAreByteIdentical) {
  TempDir dir;
  run_pipeline(mock_config(dir / "a"));
  run_pipeline(mock_config(dir / "b"));
  for (const auto name : {"report.json", "report.csv", "topics.json", "sample.json", "assignment.jsonl",
                          "judge.jsonl", "validation.json"}) {
    EXPECT_EQ(slurp(dir / "a" / name), slurp(dir / "b" / name)) << name;
  }
}

TEST(Pipeline, ResumeRerunsOnlyMissingStage) {
  TempDir dir;
  const auto config = mock_config(dir / "run");
  run_pipeline(config);
  const auto before = slurp(dir / "run" / "report.json");
  fs::remove(dir / "run" / "report.json");
  const auto again = run_pipeline(config);
  EXPECT_EQ(executed(again), std::vector<Stage>{Stage::report});
  EXPECT_EQ(slurp(dir / "run" / "report.json"), before);

  EXPECT_TRUE(executed(run_pipeline(config)).empty());
}

TEST(Pipeline, ForceRecomputes) {
  TempDir dir;
  const auto config = mock_config(dir / "run");
  run_pipeline(config);
  PipelineOptions options;
  options.force = {Stage::assign};
  EXPECT_EQ(executed(run_pipeline(config, options)), std::vector<Stage>{Stage::assign});
}

TEST(Pipeline, StageSubsetStopsEarly) {
  TempDir dir;
  PipelineOptions options;
  options.stages = {Stage::sample};
  run_pipeline(mock_config(dir / "run"), options);
  EXPECT_TRUE(fs::exists(dir / "run" / "sample.json"));
  EXPECT_FALSE(fs::exists(dir / "run" / "raw_generation.txt"));
}

TEST(Pipeline, NoJudgeLeavesJudgeMissing) {
  TempDir dir;
  auto config = mock_config(dir / "run");
  config.judge.reset();
  const auto result = run_pipeline(config);
  EXPECT_FALSE(result.executed(Stage::judge));
  EXPECT_FALSE(fs::exists(dir / "run" / "judge.jsonl"));
  const auto report = nlohmann::json::parse(slurp(dir / "run" / "report.json"));
  EXPECT_TRUE(report["judge"].is_null());
}

TEST(Pipeline, MissingCorpusFailsBeforeAnyCall) {
  TempDir dir;
  auto config = mock_config(dir / "run");
  config.corpus = dir / "nope.jsonl";
  PipelineOptions options;
  auto backend = canned("[]");
  options.generation_backend = backend;
  EXPECT_EQ(failure_code(config, options), ExitCode::config);
  EXPECT_EQ(backend->calls(), 0u);
  EXPECT_FALSE(fs::exists(dir / "run"));
}

TEST(Pipeline, ConfigErrors) {
  TempDir dir;
  auto config = mock_config(dir / "run");
  config.generation.mock_script = dir / "missing_script.json";
  EXPECT_EQ(failure_code(config), ExitCode::config);

  config = mock_config(dir / "run");
  config.generation.kind = BackendKind::live;
  config.generation.model.endpoint_url = "http://127.0.0.1:1/v1/chat/completions";
  config.generation.model.api_key_env = "TOPICCARDS_DEFINITELY_UNSET";
  ::unsetenv("TOPICCARDS_DEFINITELY_UNSET");
  EXPECT_EQ(failure_code(config), ExitCode::config);

  config = mock_config(dir / "run");
  config.sampling.budget_tokens = 100;
  EXPECT_EQ(failure_code(config), ExitCode::config);

  auto both = mock_config(dir / "run").to_json();
  both["generation"].erase("backend");
  both["generation"]["endpoint_url"] = "http://x/y";
  EXPECT_THROW(RunConfig::from_json(nlohmann::json::parse(both.dump())), ConfigError);
}

TEST(Pipeline, BudgetTooSmallForOneDocumentIsConfigError) {
  TempDir dir;
  auto config = mock_config(dir / "run");
  config.sampling.budget_tokens = config.sampling.overhead_tokens + 5;
  EXPECT_EQ(failure_code(config), ExitCode::config);
}

TEST(Pipeline, ParseFailureKeepsEarlierArtifacts) {
  TempDir dir;
  PipelineOptions options;
  options.generation_backend = canned("I'm sorry, I can't do that.");
  try {
    run_pipeline(mock_config(dir / "run"), options);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), Stage::topics);
    EXPECT_EQ(e.code(), ExitCode::parse);
  }
  EXPECT_TRUE(fs::exists(dir / "run" / "sample.json"));
  EXPECT_EQ(slurp(dir / "run" / "raw_generation.txt"), "I'm sorry, I can't do that.");
  EXPECT_FALSE(fs::exists(dir / "run" / "topics.json"));
}

TEST(Pipeline, TooFewUsableCardsIsValidationFatal) {
  TempDir dir;
  PipelineOptions options;
  options.generation_backend = canned(
      R"([{"summary": "One.", "keywords": ["a","b","c","d","e"], "source_titles": ["x","y","z"]},
          {"summary": "Two.", "keywords": ["f","g","h","i","j"], "source_titles": ["x","y","z"]}])");
  EXPECT_EQ(failure_code(mock_config(dir / "run"), options), ExitCode::validation_fatal);
  EXPECT_TRUE(fs::exists(dir / "run" / "validation.json"));
  EXPECT_FALSE(fs::exists(dir / "run" / "topics.json"));
  const auto validation = nlohmann::json::parse(slurp(dir / "run" / "validation.json"));
  EXPECT_FALSE(validation["ok"].get<bool>());
}

TEST(Pipeline, UnscriptedGenerationIsNetworkFailure) {
  TempDir dir;
  PipelineOptions options;
  options.generation_backend = mock_backend(MockScript{});
  EXPECT_EQ(failure_code(mock_config(dir / "run"), options), ExitCode::network);
  EXPECT_FALSE(fs::exists(dir / "run" / "raw_generation.txt"));
}

TEST(Pipeline, ManifestReproducesConfig) {
  TempDir dir;
  const auto config = mock_config(dir / "run");
  run_pipeline(config);
  const auto manifest = nlohmann::json::parse(slurp(dir / "run" / "manifest.json"));
  EXPECT_EQ(manifest["config_digest"], config.digest());
  EXPECT_EQ(manifest["seed"], 7);
  const auto reloaded = RunConfig::from_json(manifest);
  EXPECT_EQ(reloaded.digest(), config.digest());
  EXPECT_EQ(reloaded.to_json().dump(), config.to_json().dump());
}

TEST(Pipeline, LoadResolvesPathsAgainstConfigFile) {
  const auto config = RunConfig::load(fixture("mock_run.json"));
  EXPECT_EQ(config.corpus, fs::path(TOPICCARDS_FIXTURE_DIR) / "corpus_1000.jsonl");
  EXPECT_EQ(config.generation.kind, BackendKind::mock);
  ASSERT_TRUE(config.judge.has_value());
  EXPECT_NO_THROW(config.validate());
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code_for(ConfigError("x")), ExitCode::config);
  EXPECT_EQ(exit_code_for(BudgetError("x", 1)), ExitCode::config);
  EXPECT_EQ(exit_code_for(ParseFailure("x", "")), ExitCode::parse);
  EXPECT_EQ(exit_code_for(RetriesExhausted(2, "x")), ExitCode::network);
  EXPECT_EQ(exit_code_for(ValidationFatal("x")), ExitCode::validation_fatal);
  EXPECT_EQ(exit_code_for(std::runtime_error("x")), ExitCode::internal);
  EXPECT_EQ(exit_code_for(StageError(Stage::judge, ExitCode::network, "x")), ExitCode::network);
}
