#pragma once

#include <cstddef>
#include <exception>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "topiccards/llm_gateway.h"
#include "topiccards/topic_cards.h"

namespace topiccards {

/// Bumped whenever the rubric wording changes; recorded in every report.
inline constexpr std::string_view kJudgeRubricVersion = "judge-rubric-v1";
extern const std::string_view kJudgeSystemPrompt;

struct JudgeScore {
  std::size_t topic = 0;
  int coherence = 0;
  int concise = 0;
  int informative = 0;
  std::string raw_digest;

  bool operator==(const JudgeScore&) const = default;
};

CompletionRequest build_judge_prompt(const TopicCard& card);

/// Reads the first JSON object in `raw`. All three scores must be JSON
/// integers in [1, 5]. Throws ParseFailure naming the offending key.
JudgeScore parse_judge_scores(std::string_view raw);

struct JudgeAggregate {
  double coherence = 0.0;
  double concise = 0.0;
  double informative = 0.0;
  std::vector<JudgeScore> per_topic;

  bool operator==(const JudgeAggregate&) const = default;
};

/// Per-dimension arithmetic means rounded to three decimals.
JudgeAggregate aggregate_scores(const std::vector<JudgeScore>& scores);

struct JudgeOutcome {
  std::size_t topic = 0;
  std::optional<JudgeScore> score;
  std::string error;
  std::exception_ptr exception;  // set when the call or the parse failed
};

/// One judge call per usable card, issued through the gateway's bounded
/// parallelism. Per-topic failures are reported, not thrown.
std::vector<JudgeOutcome> judge_topics(const Gateway& gateway, const TopicSet& set);

nlohmann::ordered_json to_json(const JudgeScore& score);
JudgeScore judge_score_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const JudgeAggregate& aggregate);
JudgeAggregate judge_aggregate_from_json(const nlohmann::json& j);

}  // namespace topiccards
