#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace topiccards {

struct ModelConfig {
  std::string endpoint_url;
  std::string model_name;
  // Name of the environment variable that holds the API key. Keys are never
  // accepted directly.
  std::string api_key_env;
  double temperature = 0.0;
  std::size_t max_output_tokens = 4096;
  std::size_t max_in_flight = 4;
  std::size_t retry_limit = 3;
  std::chrono::milliseconds backoff_base{500};
  std::chrono::milliseconds timeout{120000};

  void validate() const;
};

struct CompletionRequest {
  std::string system;
  std::string user;
  double temperature = 0.0;
  std::size_t max_output_tokens = 4096;
};

struct TokenUsage {
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
};

struct CompletionResponse {
  std::string text;  // byte-exact message content
  std::string finish_reason = "stop";
  TokenUsage usage;
  std::size_t attempts = 1;

  bool truncated() const { return finish_reason == "length"; }
};

/// Hex SHA-256 over system text, a NUL byte, and user text. Mock scripts are
/// keyed by this value.
std::string fingerprint(const CompletionRequest& request);

/// One round trip to a model. Implementations throw TransientError for
/// retryable failures and other LlmError subclasses for everything else.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual CompletionResponse send(const ModelConfig& config, const CompletionRequest& request) = 0;
};

/// OpenAI-compatible chat-completions client over HTTP(S).
class HttpBackend final : public Backend {
 public:
  CompletionResponse send(const ModelConfig& config, const CompletionRequest& request) override;

  static nlohmann::json request_body(const ModelConfig& config, const CompletionRequest& request);
  /// Extracts content, finish reason and usage from a 200 response body.
  static CompletionResponse parse_response_body(const std::string& body);
};

struct ScriptedResponse {
  std::string text;
  std::string finish_reason = "stop";
};

struct MockScript {
  struct Rule {
    std::string contains;  // substring of the user text
    ScriptedResponse response;
  };

  std::map<std::string, ScriptedResponse> by_fingerprint;
  std::vector<Rule> rules;  // consulted in order when no fingerprint matches
  std::optional<ScriptedResponse> fallback;
  std::chrono::milliseconds delay{0};

  static MockScript from_json(const nlohmann::json& j);
  static MockScript load(const std::filesystem::path& path);
};

/// Deterministic offline backend. Counts calls and the peak number of
/// concurrent requests so tests can observe the gateway's behaviour.
class MockBackend final : public Backend {
 public:
  explicit MockBackend(MockScript script) : script_(std::move(script)) {}

  CompletionResponse send(const ModelConfig& config, const CompletionRequest& request) override;

  std::size_t calls() const { return calls_.load(); }
  std::size_t peak_in_flight() const { return peak_in_flight_.load(); }

 private:
  MockScript script_;
  std::atomic<std::size_t> calls_{0};
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> peak_in_flight_{0};
};

std::shared_ptr<MockBackend> mock_backend(MockScript script);

/// Sends `request` through `backend`, retrying transient failures up to
/// config.retry_limit times with exponential backoff.
CompletionResponse complete(const ModelConfig& config, Backend& backend, const CompletionRequest& request);

struct CompletionOutcome {
  std::optional<CompletionResponse> response;
  std::exception_ptr error;

  bool ok() const { return response.has_value(); }
};

class Gateway {
 public:
  Gateway(ModelConfig config, std::shared_ptr<Backend> backend,
          std::optional<std::filesystem::path> raw_log_dir = std::nullopt);

  const ModelConfig& config() const noexcept { return config_; }

  /// Request carrying this gateway's temperature and output limit.
  CompletionRequest make_request(std::string system, std::string user) const;

  /// Single call with retries. The raw reply is written to the log directory
  /// before it is returned.
  CompletionResponse complete(const CompletionRequest& request) const;

  /// Runs every request with at most config.max_in_flight outstanding.
  /// Outcomes are returned in request order.
  std::vector<CompletionOutcome> complete_all(const std::vector<CompletionRequest>& requests) const;

 private:
  void log_raw(const CompletionRequest& request, const CompletionResponse& response) const;

  ModelConfig config_;
  std::shared_ptr<Backend> backend_;
  std::optional<std::filesystem::path> raw_log_dir_;
};

nlohmann::ordered_json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig defaults = {});

}  // namespace topiccards
