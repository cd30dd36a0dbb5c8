#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "topiccards/errors.h"
#include "topiccards/judge.h"

using namespace topiccards;

namespace {

TopicCard card(std::size_t index, std::string summary, std::vector<std::string> keywords = {"a", "b"}) {
  TopicCard c;
  c.index = index;
  c.summary = std::move(summary);
  c.keywords = std::move(keywords);
  return c;
}

JudgeScore score(std::size_t topic, int c, int k, int i) { return {topic, c, k, i, ""}; }

}  // namespace

TEST(JudgePrompt, ContainsSummaryAndDimensions) {
  const auto req = build_judge_prompt(card(1, "Central banks raise rates to fight inflation.", {"inflation", "rates"}));
  EXPECT_NE(req.user.find("Central banks raise rates to fight inflation."), std::string::npos);
  EXPECT_NE(req.user.find("inflation, rates"), std::string::npos);
  for (const char* dim : {"coherence", "concise", "informative"}) EXPECT_NE(req.user.find(dim), std::string::npos);
  EXPECT_FALSE(req.system.empty());
}

TEST(JudgePrompt, DistinctCardsDistinctPrompts) {
  EXPECT_NE(build_judge_prompt(card(1, "One.")).user, build_judge_prompt(card(2, "Two.")).user);
}

TEST(JudgePrompt, EmptySummaryRejected) {
  EXPECT_THROW(build_judge_prompt(card(1, "")), std::invalid_argument);
}

TEST(ParseJudgeScores, CleanObject) {
  const auto s = parse_judge_scores(R"({"coherence":5,"concise":4,"informative":4})");
  EXPECT_EQ(s.coherence, 5);
  EXPECT_EQ(s.concise, 4);
  EXPECT_EQ(s.informative, 4);
  EXPECT_EQ(s.raw_digest.size(), 64u);
}

TEST(ParseJudgeScores, ProseAroundObjectAndAliases) {
  const auto s = parse_judge_scores(
      "Scores below {not json} then:\n```json\n{\"Coherence\": 3, \"Conciseness\": 2, \"Informativeness\": 1}\n```");
  EXPECT_EQ(s.coherence, 3);
  EXPECT_EQ(s.concise, 2);
  EXPECT_EQ(s.informative, 1);
}

TEST(ParseJudgeScores, RangeAndTypeErrors) {
  const auto expect_failure = [](const std::string& raw, const std::string& needle) {
    try {
      parse_judge_scores(raw);
      FAIL() << raw;
    } catch (const ParseFailure& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_failure(R"({"coherence":6,"concise":4,"informative":4})", "coherence");
  expect_failure(R"({"coherence":0,"concise":4,"informative":4})", "coherence");
  expect_failure(R"({"coherence":4.5,"concise":4,"informative":4})", "coherence");
  expect_failure(R"({"coherence":"4","concise":4,"informative":4})", "coherence");
  expect_failure(R"({"coherence":4,"informative":4})", "concise");
  expect_failure("no object at all", "no JSON object");
}

TEST(AggregateScores, HandAveraging) {
  const auto agg = aggregate_scores({score(1, 5, 4, 4), score(2, 4, 4, 5)});
  EXPECT_DOUBLE_EQ(agg.coherence, 4.5);
  EXPECT_DOUBLE_EQ(agg.concise, 4.0);
  EXPECT_DOUBLE_EQ(agg.informative, 4.5);
  EXPECT_EQ(agg.per_topic.size(), 2u);
}

TEST(AggregateScores, IdentityAndConstant) {
  auto agg = aggregate_scores({score(1, 2, 3, 4)});
  EXPECT_DOUBLE_EQ(agg.coherence, 2.0);
  EXPECT_DOUBLE_EQ(agg.concise, 3.0);
  EXPECT_DOUBLE_EQ(agg.informative, 4.0);
  agg = aggregate_scores(std::vector<JudgeScore>(7, score(1, 3, 3, 3)));
  EXPECT_DOUBLE_EQ(agg.coherence, 3.0);
  EXPECT_THROW(aggregate_scores({}), std::invalid_argument);
}

TEST(AggregateScores, PermutationInvariantAndInRange) {
  std::mt19937 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<JudgeScore> scores;
    for (std::size_t t = 0; t < 1 + rng() % 50; ++t) {
      scores.push_back(score(t, 1 + rng() % 5, 1 + rng() % 5, 1 + rng() % 5));
    }
    const auto a = aggregate_scores(scores);
    std::shuffle(scores.begin(), scores.end(), rng);
    const auto b = aggregate_scores(scores);
    EXPECT_EQ(a.coherence, b.coherence);
    EXPECT_EQ(a.concise, b.concise);
    EXPECT_EQ(a.informative, b.informative);
    for (double m : {a.coherence, a.concise, a.informative}) {
      EXPECT_GE(m, 1.0);
      EXPECT_LE(m, 5.0);
    }
  }
}

TEST(JudgeTopics, MockScoresAndPerTopicFailures) {
  TopicSet set;
  set.cards = {card(1, "Floods in the delta."), card(2, "Rates and prices."), card(3, "Unscripted topic."),
               card(4, "")};
  MockScript script;
  script.rules = {{"Floods", {R"({"coherence":5,"concise":4,"informative":3})", "stop"}},
                  {"Rates", {"Sure: {\"coherence\": 2, \"concise\": 9, \"informative\": 1}", "stop"}}};
  ModelConfig config;
  config.model_name = "judge";
  config.max_in_flight = 2;
  const Gateway gateway(config, mock_backend(script));
  const auto outcomes = judge_topics(gateway, set);
  ASSERT_EQ(outcomes.size(), 4u);
  ASSERT_TRUE(outcomes[0].score.has_value());
  EXPECT_EQ(outcomes[0].score->topic, 1u);
  EXPECT_EQ(outcomes[0].score->coherence, 5);
  EXPECT_FALSE(outcomes[1].score.has_value());
  EXPECT_THROW(std::rethrow_exception(outcomes[1].exception), ParseFailure);
  EXPECT_FALSE(outcomes[2].score.has_value());
  EXPECT_THROW(std::rethrow_exception(outcomes[2].exception), UnscriptedRequest);
  EXPECT_FALSE(outcomes[3].score.has_value());
  EXPECT_FALSE(outcomes[3].error.empty());
}

TEST(JudgeTopics, ReproducibleWithMock) {
  TopicSet set;
  for (std::size_t i = 1; i <= 6; ++i) set.cards.push_back(card(i, "Topic number " + std::to_string(i) + "."));
  MockScript script;
  script.fallback = ScriptedResponse{R"({"coherence":4,"concise":3,"informative":5})", "stop"};
  ModelConfig config;
  config.max_in_flight = 3;
  const auto run = [&] {
    std::vector<JudgeScore> scores;
    for (const auto& o : judge_topics(Gateway(config, mock_backend(script)), set)) scores.push_back(*o.score);
    return aggregate_scores(scores);
  };
  EXPECT_EQ(run(), run());
}

TEST(JudgeJson, RoundTrip) {
  const auto s = parse_judge_scores(R"({"coherence":5,"concise":4,"informative":4})");
  EXPECT_EQ(judge_score_from_json(nlohmann::json::parse(to_json(s).dump())), s);
  const auto agg = aggregate_scores({s, score(2, 1, 2, 3)});
  EXPECT_EQ(judge_aggregate_from_json(nlohmann::json::parse(to_json(agg).dump())), agg);
}
