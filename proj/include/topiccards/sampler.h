#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "topiccards/corpus.h"

namespace topiccards {

enum class SamplingStrategy { uniform, stratified };

struct SamplingPlan {
  SamplingStrategy strategy = SamplingStrategy::uniform;
  std::uint64_t seed = 0;
  std::size_t budget_tokens = 0;
  // Reserved for the prompt template and the model's reply.
  std::size_t overhead_tokens = 1500;
  // Estimated model tokens per whitespace token.
  double token_ratio = 1.3;

  std::size_t available_tokens() const { return budget_tokens - overhead_tokens; }
  /// Throws ConfigError when the plan is unusable for `corpus`.
  void validate(const Corpus& corpus) const;
};

struct SampleBlock {
  std::vector<std::string> doc_ids;
  std::string rendered_text;
  std::size_t estimated_tokens = 0;
  SamplingPlan plan;

  /// Short stable identifier derived from the rendered text.
  std::string sample_id() const;
};

/// ceil(whitespace_tokens * token_ratio).
std::size_t estimate_tokens(std::string_view text, double token_ratio);

/// The block a document contributes to the prompt: "Title: ...\nText: ...\n\n".
std::string render_document(const Document& doc);

/// Seeded per-id sort key; ties are broken by id.
std::uint64_t selection_key(std::uint64_t seed, std::string_view id);

/// Largest-remainder apportionment of `total` over `counts`. Ties on the
/// remainder go to the earlier entry.
std::vector<std::size_t> largest_remainder_quotas(const std::vector<std::size_t>& counts,
                                                  std::size_t total);

/// Picks documents that fit in plan.available_tokens(). Deterministic in
/// (corpus contents, plan); the input order of the corpus does not matter.
SampleBlock draw_sample(const Corpus& corpus, const SamplingPlan& plan);

std::string to_string(SamplingStrategy strategy);
SamplingStrategy parse_sampling_strategy(std::string_view name);

nlohmann::ordered_json to_json(const SamplingPlan& plan);
SamplingPlan sampling_plan_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const SampleBlock& block);
SampleBlock sample_block_from_json(const nlohmann::json& j);

}  // namespace topiccards
