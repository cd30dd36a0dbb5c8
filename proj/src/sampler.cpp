#include "topiccards/sampler.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "topiccards/digest.h"
#include "topiccards/errors.h"

namespace topiccards {

namespace {

struct Candidate {
  std::uint64_t key;
  const Document* doc;
  std::size_t cost;  // whitespace tokens of the rendered block
};

bool by_key(const Candidate& a, const Candidate& b) {
  if (a.key != b.key) return a.key < b.key;
  return a.doc->id < b.doc->id;
}

std::size_t estimate_from_count(std::size_t whitespace_tokens, double token_ratio) {
  const double scaled = static_cast<double>(whitespace_tokens) * token_ratio;
  const double nearest = std::round(scaled);
  // 100 * 1.3 must be 130, not 131.
  if (std::fabs(scaled - nearest) <= 1e-9 * std::max(1.0, scaled)) {
    return static_cast<std::size_t>(nearest);
  }
  return static_cast<std::size_t>(std::ceil(scaled));
}

std::vector<Candidate> candidates_for(const std::vector<const Document*>& docs, std::uint64_t seed) {
  std::vector<Candidate> out;
  out.reserve(docs.size());
  for (const auto* doc : docs) {
    out.push_back({selection_key(seed, doc->id), doc, count_whitespace_tokens(render_document(*doc))});
  }
  std::sort(out.begin(), out.end(), by_key);
  return out;
}

[[noreturn]] void throw_budget(const SamplingPlan& plan, std::size_t needed_estimate) {
  const std::size_t minimum = plan.overhead_tokens + needed_estimate;
  throw BudgetError("budget of " + std::to_string(plan.budget_tokens) +
                        " tokens cannot hold a single document; at least " + std::to_string(minimum) +
                        " tokens are needed",
                    minimum);
}

SampleBlock assemble(const std::vector<Candidate>& chosen, const SamplingPlan& plan) {
  SampleBlock block;
  block.plan = plan;
  for (const auto& c : chosen) {
    block.doc_ids.push_back(c.doc->id);
    block.rendered_text += render_document(*c.doc);
  }
  block.estimated_tokens = estimate_tokens(block.rendered_text, plan.token_ratio);
  return block;
}

SampleBlock draw_uniform(const Corpus& corpus, const SamplingPlan& plan) {
  std::vector<const Document*> docs;
  for (const auto& doc : corpus.documents()) docs.push_back(&doc);
  const auto ordered = candidates_for(docs, plan.seed);

  std::vector<Candidate> chosen;
  std::size_t used = 0;
  for (const auto& c : ordered) {
    if (estimate_from_count(used + c.cost, plan.token_ratio) > plan.available_tokens()) break;
    used += c.cost;
    chosen.push_back(c);
  }
  if (chosen.empty()) throw_budget(plan, estimate_from_count(ordered.front().cost, plan.token_ratio));
  return assemble(chosen, plan);
}

SampleBlock draw_stratified(const Corpus& corpus, const SamplingPlan& plan) {
  std::map<std::string, std::vector<const Document*>> by_label;
  for (const auto& doc : corpus.documents()) by_label[*doc.label].push_back(&doc);

  std::vector<std::vector<Candidate>> strata;
  std::vector<std::vector<std::size_t>> prefix_cost;
  std::vector<std::size_t> counts;
  for (const auto& [label, docs] : by_label) {
    strata.push_back(candidates_for(docs, plan.seed));
    std::vector<std::size_t> prefix{0};
    for (const auto& c : strata.back()) prefix.push_back(prefix.back() + c.cost);
    prefix_cost.push_back(std::move(prefix));
    counts.push_back(docs.size());
  }

  std::vector<std::size_t> best;
  for (std::size_t n = 1; n <= corpus.size(); ++n) {
    auto quotas = largest_remainder_quotas(counts, n);
    std::size_t cost = 0;
    for (std::size_t s = 0; s < strata.size(); ++s) cost += prefix_cost[s][quotas[s]];
    if (estimate_from_count(cost, plan.token_ratio) > plan.available_tokens()) {
      if (n == 1) throw_budget(plan, estimate_from_count(cost, plan.token_ratio));
      break;
    }
    best = std::move(quotas);
  }

  std::vector<Candidate> chosen;
  for (std::size_t s = 0; s < strata.size(); ++s) {
    chosen.insert(chosen.end(), strata[s].begin(), strata[s].begin() + static_cast<std::ptrdiff_t>(best[s]));
  }
  std::sort(chosen.begin(), chosen.end(), by_key);
  return assemble(chosen, plan);
}

}  // namespace

void SamplingPlan::validate(const Corpus& corpus) const {
  if (budget_tokens <= overhead_tokens) {
    throw ConfigError("budget_tokens (" + std::to_string(budget_tokens) +
                      ") must exceed overhead_tokens (" + std::to_string(overhead_tokens) + ")");
  }
  if (!(token_ratio > 0.0) || !std::isfinite(token_ratio)) {
    throw ConfigError("token_ratio must be a positive number");
  }
  if (strategy == SamplingStrategy::stratified) {
    for (const auto& doc : corpus.documents()) {
      if (!doc.label) throw ConfigError("stratified sampling needs a label on every document; '" + doc.id + "' has none");
    }
  }
}

std::string SampleBlock::sample_id() const { return sha256_hex(rendered_text).substr(0, 16); }

std::size_t estimate_tokens(std::string_view text, double token_ratio) {
  if (!(token_ratio > 0.0)) throw std::invalid_argument("token_ratio must be positive");
  return estimate_from_count(count_whitespace_tokens(text), token_ratio);
}

std::string render_document(const Document& doc) {
  return "Title: " + doc.title + "\nText: " + doc.body.value_or("") + "\n\n";
}

std::uint64_t selection_key(std::uint64_t seed, std::string_view id) {
  std::string material = std::to_string(seed);
  material.push_back(':');
  material.append(id);
  return sha256_prefix64(material);
}

std::vector<std::size_t> largest_remainder_quotas(const std::vector<std::size_t>& counts,
                                                  std::size_t total) {
  const std::size_t population = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  std::vector<std::size_t> quotas(counts.size(), 0);
  if (population == 0) return quotas;

  std::vector<std::size_t> remainders(counts.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const std::size_t scaled = total * counts[i];
    quotas[i] = scaled / population;
    remainders[i] = scaled % population;
    assigned += quotas[i];
  }
  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t i = 0; assigned < total && i < order.size(); ++i, ++assigned) ++quotas[order[i]];
  return quotas;
}

SampleBlock draw_sample(const Corpus& corpus, const SamplingPlan& plan) {
  plan.validate(corpus);
  return plan.strategy == SamplingStrategy::uniform ? draw_uniform(corpus, plan)
                                                    : draw_stratified(corpus, plan);
}

std::string to_string(SamplingStrategy strategy) {
  return strategy == SamplingStrategy::uniform ? "uniform" : "stratified";
}

SamplingStrategy parse_sampling_strategy(std::string_view name) {
  if (name == "uniform") return SamplingStrategy::uniform;
  if (name == "stratified") return SamplingStrategy::stratified;
  throw ConfigError("unknown sampling strategy '" + std::string(name) + "'");
}

nlohmann::ordered_json to_json(const SamplingPlan& plan) {
  nlohmann::ordered_json j;
  j["strategy"] = to_string(plan.strategy);
  j["seed"] = plan.seed;
  j["budget_tokens"] = plan.budget_tokens;
  j["overhead_tokens"] = plan.overhead_tokens;
  j["token_ratio"] = plan.token_ratio;
  return j;
}

SamplingPlan sampling_plan_from_json(const nlohmann::json& j) {
  SamplingPlan plan;
  if (j.contains("strategy")) plan.strategy = parse_sampling_strategy(j.at("strategy").get<std::string>());
  plan.seed = j.value("seed", plan.seed);
  plan.budget_tokens = j.value("budget_tokens", plan.budget_tokens);
  plan.overhead_tokens = j.value("overhead_tokens", plan.overhead_tokens);
  plan.token_ratio = j.value("token_ratio", plan.token_ratio);
  return plan;
}

nlohmann::ordered_json to_json(const SampleBlock& block) {
  nlohmann::ordered_json j;
  j["doc_ids"] = block.doc_ids;
  j["rendered_text"] = block.rendered_text;
  j["estimated_tokens"] = block.estimated_tokens;
  j["plan"] = to_json(block.plan);
  return j;
}

SampleBlock sample_block_from_json(const nlohmann::json& j) {
  SampleBlock block;
  block.doc_ids = j.at("doc_ids").get<std::vector<std::string>>();
  block.rendered_text = j.at("rendered_text").get<std::string>();
  block.estimated_tokens = j.at("estimated_tokens").get<std::size_t>();
  block.plan = sampling_plan_from_json(j.at("plan"));
  return block;
}

}  // namespace topiccards
