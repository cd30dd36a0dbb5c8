#include "topiccards/judge.h"

#include <cmath>
#include <stdexcept>

#include "json_extract.h"
#include "topiccards/digest.h"
#include "topiccards/errors.h"

namespace topiccards {

const std::string_view kJudgeSystemPrompt =
    "You are an expert reviewer of topic models. Reply with a single JSON object and nothing else.";

namespace {

constexpr std::string_view kRubric = R"(Rate the topic on three dimensions, each an integer from 1 to 5.

coherence: do the summary and keywords describe one unified theme?
  1 = unrelated ideas mixed together, 3 = mostly one theme with some stray elements, 5 = a single clear theme throughout.
concise: is the topic expressed without redundancy or filler?
  1 = verbose, repetitive or vague, 3 = acceptable with some redundancy, 5 = crisp and economical.
informative: does the topic tell a reader something specific and useful about the documents?
  1 = generic or empty, 3 = somewhat specific, 5 = specific, substantive and distinctive.

Output strictly this JSON object and nothing else:
{"coherence": <int 1-5>, "concise": <int 1-5>, "informative": <int 1-5>})";

int read_score(const nlohmann::json& obj, std::string_view name, std::initializer_list<std::string_view> aliases,
               std::string_view raw) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const auto key = detail::normalize_key(it.key());
    bool match = false;
    for (const auto alias : aliases) match = match || key == alias;
    if (!match) continue;
    if (!it->is_number_integer()) {
      throw ParseFailure("judge score \"" + std::string(name) + "\" is not an integer", detail::excerpt(raw));
    }
    const auto value = it->get<long long>();
    if (value < 1 || value > 5) {
      throw ParseFailure("judge score \"" + std::string(name) + "\" = " + std::to_string(value) +
                             " is outside [1, 5]",
                         detail::excerpt(raw));
    }
    return static_cast<int>(value);
  }
  throw ParseFailure("judge reply is missing \"" + std::string(name) + "\"", detail::excerpt(raw));
}

double mean_3dp(double sum, std::size_t n) { return std::round(sum / static_cast<double>(n) * 1000.0) / 1000.0; }

}  // namespace

CompletionRequest build_judge_prompt(const TopicCard& card) {
  if (card.summary.empty()) throw std::invalid_argument("cannot judge a topic card with an empty summary");
  std::string keywords;
  for (const auto& kw : card.keywords) {
    if (!keywords.empty()) keywords += ", ";
    keywords += kw;
  }
  CompletionRequest request;
  request.system = std::string(kJudgeSystemPrompt);
  request.user = "Topic summary: " + card.summary + "\nKeywords: " + keywords + "\n\n" + std::string(kRubric);
  return request;
}

JudgeScore parse_judge_scores(std::string_view raw) {
  for (const auto span : detail::balanced_spans(raw, '{', '}')) {
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(span);
    } catch (const nlohmann::json::parse_error&) {
      continue;
    }
    if (!obj.is_object()) continue;
    JudgeScore score;
    score.coherence = read_score(obj, "coherence", {"coherence"}, raw);
    score.concise = read_score(obj, "concise", {"concise", "conciseness"}, raw);
    score.informative = read_score(obj, "informative", {"informative", "informativeness"}, raw);
    score.raw_digest = sha256_hex(raw);
    return score;
  }
  throw ParseFailure("no JSON object in judge reply", detail::excerpt(raw));
}

JudgeAggregate aggregate_scores(const std::vector<JudgeScore>& scores) {
  if (scores.empty()) throw std::invalid_argument("cannot aggregate an empty list of judge scores");
  double coherence = 0.0;
  double concise = 0.0;
  double informative = 0.0;
  for (const auto& s : scores) {
    coherence += s.coherence;
    concise += s.concise;
    informative += s.informative;
  }
  JudgeAggregate agg;
  agg.coherence = mean_3dp(coherence, scores.size());
  agg.concise = mean_3dp(concise, scores.size());
  agg.informative = mean_3dp(informative, scores.size());
  agg.per_topic = scores;
  return agg;
}

std::vector<JudgeOutcome> judge_topics(const Gateway& gateway, const TopicSet& set) {
  std::vector<JudgeOutcome> outcomes;
  std::vector<CompletionRequest> requests;
  std::vector<std::size_t> request_slot;
  for (const auto& card : set.cards) {
    JudgeOutcome outcome;
    outcome.topic = card.index;
    if (card.summary.empty()) {
      outcome.error = "empty summary";
    } else {
      auto request = build_judge_prompt(card);
      request.temperature = gateway.config().temperature;
      request.max_output_tokens = gateway.config().max_output_tokens;
      requests.push_back(std::move(request));
      request_slot.push_back(outcomes.size());
    }
    outcomes.push_back(std::move(outcome));
  }

  const auto replies = gateway.complete_all(requests);
  for (std::size_t i = 0; i < replies.size(); ++i) {
    auto& outcome = outcomes[request_slot[i]];
    try {
      if (!replies[i].ok()) std::rethrow_exception(replies[i].error);
      auto score = parse_judge_scores(replies[i].response->text);
      score.topic = outcome.topic;
      outcome.score = std::move(score);
    } catch (const std::exception& e) {
      outcome.error = e.what();
      outcome.exception = std::current_exception();
    }
  }
  return outcomes;
}

nlohmann::ordered_json to_json(const JudgeScore& score) {
  nlohmann::ordered_json j;
  j["topic"] = score.topic;
  j["coherence"] = score.coherence;
  j["concise"] = score.concise;
  j["informative"] = score.informative;
  j["raw_digest"] = score.raw_digest;
  return j;
}

JudgeScore judge_score_from_json(const nlohmann::json& j) {
  JudgeScore s;
  s.topic = j.at("topic").get<std::size_t>();
  s.coherence = j.at("coherence").get<int>();
  s.concise = j.at("concise").get<int>();
  s.informative = j.at("informative").get<int>();
  s.raw_digest = j.value("raw_digest", std::string());
  return s;
}

nlohmann::ordered_json to_json(const JudgeAggregate& aggregate) {
  nlohmann::ordered_json j;
  j["coherence"] = aggregate.coherence;
  j["concise"] = aggregate.concise;
  j["informative"] = aggregate.informative;
  j["per_topic"] = nlohmann::ordered_json::array();
  for (const auto& s : aggregate.per_topic) j["per_topic"].push_back(to_json(s));
  return j;
}

JudgeAggregate judge_aggregate_from_json(const nlohmann::json& j) {
  JudgeAggregate agg;
  agg.coherence = j.at("coherence").get<double>();
  agg.concise = j.at("concise").get<double>();
  agg.informative = j.at("informative").get<double>();
  for (const auto& s : j.at("per_topic")) agg.per_topic.push_back(judge_score_from_json(s));
  return agg;
}

}  // namespace topiccards
