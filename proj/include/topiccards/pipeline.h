#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "topiccards/errors.h"
#include "topiccards/llm_gateway.h"
#include "topiccards/metrics.h"
#include "topiccards/sampler.h"

namespace topiccards {

enum class BackendKind { live, mock };

struct BackendConfig {
  BackendKind kind = BackendKind::mock;
  std::filesystem::path mock_script;
  ModelConfig model;
};

struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path out_dir;
  std::size_t max_words = 0;  // 0 leaves documents untouched
  SamplingPlan sampling;
  BackendConfig generation;
  std::optional<BackendConfig> judge;
  std::size_t threshold_m = 1;
  EvaluationOptions metrics;

  RunConfig();

  /// Checks paths, backends and numeric knobs without touching the network.
  void validate() const;
  std::string digest() const;

  nlohmann::ordered_json to_json() const;
  /// Accepts a config document or a manifest.json (which embeds one).
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
};

enum class Stage { sample, generate, topics, assign, judge, report };

std::string to_string(Stage stage);

/// Process exit codes.
enum class ExitCode : int {
  success = 0,
  internal = 1,
  config = 2,
  parse = 3,
  network = 4,
  validation_fatal = 5,
};

ExitCode exit_code_for(const std::exception& error);

class StageError : public Error {
 public:
  StageError(Stage stage, ExitCode code, const std::string& what)
      : Error("stage " + to_string(stage) + " failed: " + what), stage_(stage), code_(code) {}
  Stage stage() const noexcept { return stage_; }
  ExitCode code() const noexcept { return code_; }

 private:
  Stage stage_;
  ExitCode code_;
};

/// Fixed artifact names inside a run directory.
namespace artifacts {
inline constexpr std::string_view manifest = "manifest.json";
inline constexpr std::string_view sample = "sample.json";
inline constexpr std::string_view raw_generation = "raw_generation.txt";
inline constexpr std::string_view topics = "topics.json";
inline constexpr std::string_view validation = "validation.json";
inline constexpr std::string_view assignment = "assignment.jsonl";
inline constexpr std::string_view judge = "judge.jsonl";
inline constexpr std::string_view report = "report.json";
inline constexpr std::string_view report_csv = "report.csv";
inline constexpr std::string_view run_log = "run.log";
inline constexpr std::string_view raw_dir = "raw";
}  // namespace artifacts

std::string_view artifact_for(Stage stage);

struct PipelineOptions {
  // Which stages to run; each is skipped when its artifact already exists.
  std::vector<Stage> stages{Stage::sample, Stage::generate, Stage::topics,
                            Stage::assign, Stage::judge,    Stage::report};
  // Delete these stages' artifacts first.
  std::vector<Stage> force;
  // Override the configured backends (tests).
  std::shared_ptr<Backend> generation_backend;
  std::shared_ptr<Backend> judge_backend;
};

struct StageRecord {
  Stage stage;
  bool executed = false;
};

struct RunResult {
  std::filesystem::path dir;
  std::vector<StageRecord> stages;

  bool executed(Stage stage) const;
};

/// Runs the requested stages in order. Throws StageError carrying the exit code.
RunResult run_pipeline(const RunConfig& config, const PipelineOptions& options = {});

}  // namespace topiccards
