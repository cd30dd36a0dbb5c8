#include "topiccards/llm_gateway.h"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <thread>

#include "topiccards/digest.h"
#include "topiccards/errors.h"

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

namespace topiccards {

namespace {

constexpr std::size_t kExcerptLength = 200;

std::string excerpt(const std::string& text) {
  return text.size() <= kExcerptLength ? text : text.substr(0, kExcerptLength);
}

bool is_transient_status(int status) { return status == 429 || (status >= 500 && status <= 599); }

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& url) {
  static const std::regex pattern(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(url, m, pattern)) throw ConfigError("invalid endpoint URL '" + url + "'");
  return {m[1].str(), m[2].matched ? m[2].str() : std::string("/")};
}

ScriptedResponse scripted_from_json(const nlohmann::json& j) {
  if (j.is_string()) return {j.get<std::string>(), "stop"};
  if (j.is_object() && j.contains("text")) {
    return {j.at("text").get<std::string>(), j.value("finish_reason", std::string("stop"))};
  }
  throw ConfigError("mock response must be a string or an object with \"text\"");
}

void update_peak(std::atomic<std::size_t>& peak, std::size_t value) {
  std::size_t seen = peak.load();
  while (value > seen && !peak.compare_exchange_weak(seen, value)) {
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (max_output_tokens < 1) throw ConfigError("max_output_tokens must be at least 1");
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be at least 1");
  if (!(temperature >= 0.0 && temperature <= 2.0)) throw ConfigError("temperature must lie in [0, 2]");
}

std::string fingerprint(const CompletionRequest& request) {
  std::string material = request.system;
  material.push_back('\0');
  material += request.user;
  return sha256_hex(material);
}

nlohmann::json HttpBackend::request_body(const ModelConfig& config, const CompletionRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  if (!request.system.empty()) messages.push_back({{"role", "system"}, {"content", request.system}});
  messages.push_back({{"role", "user"}, {"content", request.user}});
  return {{"model", config.model_name},
          {"messages", std::move(messages)},
          {"temperature", request.temperature},
          {"max_tokens", request.max_output_tokens}};
}

CompletionResponse HttpBackend::parse_response_body(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    throw LlmError("endpoint returned non-JSON body: " + excerpt(body));
  }
  const auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) {
    throw LlmError("endpoint response has no choices: " + excerpt(body));
  }
  const auto& choice = choices->front();
  CompletionResponse response;
  if (choice.contains("message") && choice["message"].contains("content") &&
      choice["message"]["content"].is_string()) {
    response.text = choice["message"]["content"].get<std::string>();
  }
  if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
    response.finish_reason = choice["finish_reason"].get<std::string>();
  }
  if (const auto usage = j.find("usage"); usage != j.end() && usage->is_object()) {
    response.usage.prompt_tokens = usage->value("prompt_tokens", std::size_t{0});
    response.usage.completion_tokens = usage->value("completion_tokens", std::size_t{0});
  }
  return response;
}

CompletionResponse HttpBackend::send(const ModelConfig& config, const CompletionRequest& request) {
  const auto endpoint = split_url(config.endpoint_url);
  httplib::Client client(endpoint.origin);
  const auto timeout_s = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
  const auto timeout_us = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - timeout_s);
  client.set_connection_timeout(timeout_s.count(), timeout_us.count());
  client.set_read_timeout(timeout_s.count(), timeout_us.count());
  client.set_write_timeout(timeout_s.count(), timeout_us.count());

  httplib::Headers headers;
  if (!config.api_key_env.empty()) {
    const char* key = std::getenv(config.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw ConfigError("environment variable " + config.api_key_env + " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  const auto result =
      client.Post(endpoint.path, headers, request_body(config, request).dump(), "application/json");
  if (!result) throw TransientError("request failed: " + httplib::to_string(result.error()));
  if (is_transient_status(result->status)) {
    throw TransientError("HTTP " + std::to_string(result->status) + ": " + excerpt(result->body),
                         result->status);
  }
  if (result->status != 200) throw HttpStatusError(result->status, excerpt(result->body));
  return parse_response_body(result->body);
}

MockScript MockScript::from_json(const nlohmann::json& j) {
  MockScript script;
  if (!j.is_object()) throw ConfigError("mock script must be a JSON object");
  if (const auto it = j.find("responses"); it != j.end()) {
    for (const auto& [fp, value] : it->items()) script.by_fingerprint.emplace(fp, scripted_from_json(value));
  }
  if (const auto it = j.find("rules"); it != j.end()) {
    for (const auto& rule : *it) {
      script.rules.push_back({rule.at("contains").get<std::string>(), scripted_from_json(rule.at("response"))});
    }
  }
  if (const auto it = j.find("default"); it != j.end() && !it->is_null()) {
    script.fallback = scripted_from_json(*it);
  }
  script.delay = std::chrono::milliseconds(j.value("delay_ms", 0));
  return script;
}

MockScript MockScript::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mock script " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("mock script " + path.string() + ": " + e.what());
  }
}

CompletionResponse MockBackend::send(const ModelConfig& /*config*/, const CompletionRequest& request) {
  ++calls_;
  update_peak(peak_in_flight_, ++in_flight_);
  struct Leave {
    std::atomic<std::size_t>& counter;
    ~Leave() { --counter; }
  } leave{in_flight_};

  if (script_.delay.count() > 0) std::this_thread::sleep_for(script_.delay);

  const ScriptedResponse* hit = nullptr;
  const auto fp = fingerprint(request);
  if (const auto it = script_.by_fingerprint.find(fp); it != script_.by_fingerprint.end()) {
    hit = &it->second;
  } else {
    for (const auto& rule : script_.rules) {
      if (request.user.find(rule.contains) != std::string::npos) {
        hit = &rule.response;
        break;
      }
    }
  }
  if (hit == nullptr && script_.fallback) hit = &*script_.fallback;
  if (hit == nullptr) throw UnscriptedRequest(fp);

  CompletionResponse response;
  response.text = hit->text;
  response.finish_reason = hit->finish_reason;
  return response;
}

std::shared_ptr<MockBackend> mock_backend(MockScript script) {
  return std::make_shared<MockBackend>(std::move(script));
}

CompletionResponse complete(const ModelConfig& config, Backend& backend, const CompletionRequest& request) {
  std::string last_cause;
  for (std::size_t attempt = 0; attempt <= config.retry_limit; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(config.backoff_base * (1LL << std::min<std::size_t>(attempt - 1, 16)));
    try {
      auto response = backend.send(config, request);
      response.attempts = attempt + 1;
      return response;
    } catch (const TransientError& e) {
      last_cause = e.what();
    }
  }
  throw RetriesExhausted(static_cast<int>(config.retry_limit + 1), last_cause);
}

Gateway::Gateway(ModelConfig config, std::shared_ptr<Backend> backend,
                 std::optional<std::filesystem::path> raw_log_dir)
    : config_(std::move(config)), backend_(std::move(backend)), raw_log_dir_(std::move(raw_log_dir)) {
  config_.validate();
  if (!backend_) throw ConfigError("gateway needs a backend");
}

CompletionRequest Gateway::make_request(std::string system, std::string user) const {
  return {std::move(system), std::move(user), config_.temperature, config_.max_output_tokens};
}

CompletionResponse Gateway::complete(const CompletionRequest& request) const {
  auto response = topiccards::complete(config_, *backend_, request);
  log_raw(request, response);
  return response;
}

std::vector<CompletionOutcome> Gateway::complete_all(const std::vector<CompletionRequest>& requests) const {
  std::vector<CompletionOutcome> outcomes(requests.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        outcomes[i].response = complete(requests[i]);
      } catch (...) {
        outcomes[i].error = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(config_.max_in_flight, requests.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return outcomes;
}

void Gateway::log_raw(const CompletionRequest& request, const CompletionResponse& response) const {
  if (!raw_log_dir_) return;
  std::filesystem::create_directories(*raw_log_dir_);
  const auto fp = fingerprint(request);
  nlohmann::ordered_json entry;
  entry["fingerprint"] = fp;
  entry["model"] = config_.model_name;
  entry["system"] = request.system;
  entry["user"] = request.user;
  entry["text"] = response.text;
  entry["finish_reason"] = response.finish_reason;
  entry["usage"] = {{"prompt_tokens", response.usage.prompt_tokens},
                    {"completion_tokens", response.usage.completion_tokens}};
  std::ofstream out(*raw_log_dir_ / (fp + ".json"), std::ios::binary);
  out << entry.dump(2) << '\n';
}

nlohmann::ordered_json to_json(const ModelConfig& config) {
  nlohmann::ordered_json j;
  j["endpoint_url"] = config.endpoint_url;
  j["model"] = config.model_name;
  j["api_key_env"] = config.api_key_env;
  j["temperature"] = config.temperature;
  j["max_output_tokens"] = config.max_output_tokens;
  j["max_in_flight"] = config.max_in_flight;
  j["retry_limit"] = config.retry_limit;
  j["backoff_ms"] = config.backoff_base.count();
  j["timeout_ms"] = config.timeout.count();
  return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig defaults) {
  ModelConfig c = std::move(defaults);
  c.endpoint_url = j.value("endpoint_url", c.endpoint_url);
  c.model_name = j.value("model", c.model_name);
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  c.temperature = j.value("temperature", c.temperature);
  c.max_output_tokens = j.value("max_output_tokens", c.max_output_tokens);
  c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
  c.retry_limit = j.value("retry_limit", c.retry_limit);
  c.backoff_base = std::chrono::milliseconds(j.value("backoff_ms", c.backoff_base.count()));
  c.timeout = std::chrono::milliseconds(j.value("timeout_ms", c.timeout.count()));
  return c;
}

}  // namespace topiccards
