#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "topiccards/errors.h"
#include "topiccards/sampler.h"

using namespace topiccards;

namespace {

std::string words(std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += (i ? " w" : "w") + std::to_string(i);
  return out;
}

Corpus labeled_corpus(std::size_t n, const std::vector<std::pair<std::string, std::size_t>>& label_counts,
                      std::size_t body_words = 20) {
  std::vector<Document> docs;
  std::size_t i = 0;
  for (const auto& [label, count] : label_counts) {
    for (std::size_t k = 0; k < count; ++k, ++i) {
      docs.push_back(Document::make("d" + std::to_string(i), "Title " + std::to_string(i), words(body_words), label));
    }
  }
  EXPECT_EQ(docs.size(), n);
  return Corpus::from_documents(std::move(docs));
}

// Hamilton apportionment by handing out leftover seats one at a time to the
// entry with the largest exact remainder (lowest index on ties).
std::vector<std::size_t> hamilton_oracle(const std::vector<std::size_t>& counts, std::size_t total) {
  std::size_t pop = 0;
  for (auto c : counts) pop += c;
  std::vector<std::size_t> q(counts.size());
  std::vector<bool> bumped(counts.size(), false);
  std::size_t given = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    q[i] = total * counts[i] / pop;
    given += q[i];
  }
  while (given < total) {
    std::size_t best = counts.size();
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (bumped[i]) continue;
      if (best == counts.size() || (total * counts[i]) % pop > (total * counts[best]) % pop) best = i;
    }
    bumped[best] = true;
    ++q[best];
    ++given;
  }
  return q;
}

}  // namespace

TEST(EstimateTokens, DirectFormula) {
  EXPECT_EQ(estimate_tokens(words(100), 1.3), 130u);
  EXPECT_EQ(estimate_tokens("", 1.3), 0u);
  EXPECT_EQ(estimate_tokens("a b c", 1.0), 3u);
  EXPECT_EQ(estimate_tokens("a b c", 1.1), 4u);  // ceil(3.3)
  EXPECT_THROW(estimate_tokens("a", 0.0), std::invalid_argument);
}

TEST(EstimateTokens, ConcatenationIsMonotone) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s1 = words(rng() % 50);
    const auto s2 = words(rng() % 50);
    const double ratio = 0.5 + (rng() % 200) / 100.0;
    const auto joined = estimate_tokens(s1 + " " + s2, ratio);
    EXPECT_GE(joined, std::max(estimate_tokens(s1, ratio), estimate_tokens(s2, ratio)));
  }
}

TEST(RenderDocument, Layout) {
  EXPECT_EQ(render_document(Document::make("1", "A B", std::string("c d"))), "Title: A B\nText: c d\n\n");
  EXPECT_EQ(render_document(Document::make("1", "A")), "Title: A\nText: \n\n");
}

TEST(LargestRemainder, MatchesOracle) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::size_t> counts(1 + rng() % 6);
    std::size_t pop = 0;
    for (auto& c : counts) pop += (c = 1 + rng() % 40);
    const std::size_t total = rng() % (pop + 1);
    const auto q = largest_remainder_quotas(counts, total);
    EXPECT_EQ(q, hamilton_oracle(counts, total));
    std::size_t sum = 0;
    for (auto v : q) sum += v;
    EXPECT_EQ(sum, total);
  }
}

TEST(LargestRemainder, TieGoesToEarlierEntry) {
  EXPECT_EQ(largest_remainder_quotas({1, 1}, 1), (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(largest_remainder_quotas({70, 30}, 100), (std::vector<std::size_t>{70, 30}));
}

TEST(DrawSample, NonBindingBudgetTakesEverything) {
  const auto c = labeled_corpus(10, {{"a", 10}});
  SamplingPlan plan;
  plan.budget_tokens = 100000;
  const auto block = draw_sample(c, plan);
  EXPECT_EQ(block.doc_ids.size(), 10u);
  EXPECT_EQ(std::set<std::string>(block.doc_ids.begin(), block.doc_ids.end()).size(), 10u);
}

TEST(DrawSample, DeterministicAndOrderIndependent) {
  const auto c = labeled_corpus(50, {{"a", 50}});
  SamplingPlan plan;
  plan.seed = 3;
  plan.budget_tokens = 1500 + 400;
  const auto a = draw_sample(c, plan);
  const auto b = draw_sample(c, plan);
  EXPECT_EQ(a.doc_ids, b.doc_ids);
  EXPECT_EQ(a.rendered_text, b.rendered_text);
  EXPECT_EQ(a.sample_id(), b.sample_id());

  auto docs = c.documents();
  std::reverse(docs.begin(), docs.end());
  const auto reversed = draw_sample(Corpus::from_documents(docs), plan);
  EXPECT_EQ(a.doc_ids, reversed.doc_ids);

  plan.seed = 4;
  EXPECT_NE(draw_sample(c, plan).doc_ids, a.doc_ids);
}

TEST(DrawSample, RenderedTextMatchesIdsAndEstimate) {
  const auto c = labeled_corpus(30, {{"a", 30}});
  SamplingPlan plan;
  plan.budget_tokens = 1500 + 300;
  const auto block = draw_sample(c, plan);
  std::string expected;
  for (const auto& id : block.doc_ids) expected += render_document(*c.find(id));
  EXPECT_EQ(block.rendered_text, expected);
  EXPECT_EQ(block.estimated_tokens, estimate_tokens(expected, plan.token_ratio));
  EXPECT_LE(block.estimated_tokens, plan.available_tokens());
}

TEST(DrawSample, BudgetTooSmallNamesMinimum) {
  const auto c = labeled_corpus(3, {{"a", 3}});
  SamplingPlan plan;
  plan.budget_tokens = 1510;
  try {
    draw_sample(c, plan);
    FAIL();
  } catch (const BudgetError& e) {
    // "Title: Title N" + "Text:" + 20 words = 24 whitespace tokens -> ceil(31.2)
    EXPECT_EQ(e.minimum_budget(), 1500u + 32u);
    EXPECT_NE(std::string(e.what()).find("1532"), std::string::npos);
  }
}

TEST(DrawSample, PlanValidation) {
  const auto c = labeled_corpus(3, {{"a", 3}});
  SamplingPlan plan;
  plan.budget_tokens = 1500;
  EXPECT_THROW(draw_sample(c, plan), ConfigError);
  plan.budget_tokens = 5000;
  plan.token_ratio = 0.0;
  EXPECT_THROW(draw_sample(c, plan), ConfigError);

  plan.token_ratio = 1.3;
  plan.strategy = SamplingStrategy::stratified;
  auto unlabeled = Corpus::from_documents({Document::make("x", "X")});
  EXPECT_THROW(draw_sample(unlabeled, plan), ConfigError);
}

TEST(DrawSample, StratifiedSplitMatchesLargestRemainder) {
  const auto c = labeled_corpus(1000, {{"A", 700}, {"B", 300}});
  SamplingPlan plan;
  plan.strategy = SamplingStrategy::stratified;
  // 24 whitespace tokens per rendered document -> 31.2 estimated each; room for ~100.
  plan.budget_tokens = 1500 + 3130;
  const auto block = draw_sample(c, plan);

  std::map<std::string, std::size_t> histogram;
  for (const auto& id : block.doc_ids) ++histogram[*c.find(id)->label];
  const std::size_t n = block.doc_ids.size();
  EXPECT_EQ(n, 100u);
  const auto quotas = hamilton_oracle({700, 300}, n);
  EXPECT_EQ(histogram["A"], quotas[0]);
  EXPECT_EQ(histogram["B"], quotas[1]);
  EXPECT_LE(block.estimated_tokens, plan.available_tokens());
}

TEST(DrawSample, RandomBudgetsNeverOverflow) {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Document> docs;
    const std::size_t n = 1 + rng() % 60;
    for (std::size_t i = 0; i < n; ++i) {
      docs.push_back(Document::make("id" + std::to_string(i), "T" + std::to_string(i), words(rng() % 80),
                                    std::string(1, static_cast<char>('a' + rng() % 3))));
    }
    const auto c = Corpus::from_documents(std::move(docs));
    SamplingPlan plan;
    plan.seed = rng();
    plan.overhead_tokens = rng() % 200;
    plan.budget_tokens = plan.overhead_tokens + 1 + rng() % 3000;
    plan.token_ratio = 0.8 + (rng() % 100) / 100.0;
    plan.strategy = trial % 2 ? SamplingStrategy::stratified : SamplingStrategy::uniform;
    try {
      const auto block = draw_sample(c, plan);
      EXPECT_LE(block.estimated_tokens, plan.available_tokens());
      EXPECT_FALSE(block.doc_ids.empty());
    } catch (const BudgetError& e) {
      EXPECT_GT(e.minimum_budget(), plan.budget_tokens);
    }
  }
}

TEST(SampleBlock, JsonRoundTrip) {
  const auto c = labeled_corpus(5, {{"a", 5}});
  SamplingPlan plan;
  plan.seed = 12;
  plan.budget_tokens = 9000;
  plan.strategy = SamplingStrategy::stratified;
  const auto block = draw_sample(c, plan);
  const auto back = sample_block_from_json(nlohmann::json::parse(to_json(block).dump()));
  EXPECT_EQ(back.doc_ids, block.doc_ids);
  EXPECT_EQ(back.rendered_text, block.rendered_text);
  EXPECT_EQ(back.estimated_tokens, block.estimated_tokens);
  EXPECT_EQ(back.plan.seed, 12u);
  EXPECT_EQ(back.plan.strategy, SamplingStrategy::stratified);
  EXPECT_EQ(back.sample_id().size(), 16u);
}

TEST(SamplingStrategy, Names) {
  EXPECT_EQ(parse_sampling_strategy("uniform"), SamplingStrategy::uniform);
  EXPECT_EQ(to_string(SamplingStrategy::stratified), "stratified");
  EXPECT_THROW(parse_sampling_strategy("random"), ConfigError);
}
