#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "topiccards/corpus.h"
#include "topiccards/llm_gateway.h"
#include "topiccards/sampler.h"

namespace topiccards {

struct Assignment;

inline constexpr std::size_t kMinTopics = 3;
inline constexpr std::size_t kMinKeywords = 5;
inline constexpr std::size_t kMaxKeywords = 12;
inline constexpr std::size_t kMinTitles = 3;
inline constexpr std::size_t kMaxTitles = 8;

/// Zero-shot topic extraction instruction sent ahead of the sampled documents.
extern const std::string_view kGenerationPrompt;
extern const std::string_view kGenerationSystemPrompt;

struct TopicCard {
  std::size_t index = 0;  // 1-based, input order
  std::string summary;
  std::vector<std::string> keywords;  // salience order
  std::vector<std::string> source_titles;
  // Per-card bound problems noticed while parsing; the card is kept regardless.
  std::vector<std::string> flags;

  bool usable() const { return !summary.empty() && !keywords.empty(); }
  bool operator==(const TopicCard&) const = default;
};

struct Provenance {
  std::string model;
  std::string sample_id;
  std::string raw_digest;

  bool operator==(const Provenance&) const = default;
};

struct TopicSet {
  std::vector<TopicCard> cards;
  Provenance provenance;

  std::size_t size() const { return cards.size(); }
  std::size_t usable_count() const;
  const TopicCard* find(std::size_t index) const;
  bool operator==(const TopicSet&) const = default;
};

/// The fixed instruction followed by the sample's rendered documents.
CompletionRequest build_generation_prompt(const SampleBlock& sample);

/// Tolerant extraction of topic cards from raw model output: code fences are
/// stripped, the first balanced JSON array holding cards is used, both the
/// {"Topic N": {...}} and plain-card shapes are accepted, and key spelling
/// ("Source Titles", "source_titles", "sourceTitles") does not matter.
/// Throws ParseFailure.
TopicSet parse_topic_cards(std::string_view raw);

enum class ViolationKind {
  too_few_topics,
  keyword_count,
  title_count,
  duplicate_title,
  hallucinated_title,
  empty_summary,
};

std::string to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::optional<std::size_t> topic;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  // 1 - distinct/total over case-folded keywords of all cards.
  double keyword_repetition_rate = 0.0;

  bool ok() const { return violations.empty(); }
  std::size_t count(ViolationKind kind) const;
};

ValidationReport validate_topic_set(const TopicSet& set, const Corpus& corpus);

enum class SalienceScheme { reciprocal_rank, uniform };

std::string to_string(SalienceScheme scheme);
SalienceScheme parse_salience_scheme(std::string_view name);

struct KeywordSalience {
  std::size_t topic = 0;
  std::vector<std::pair<std::string, double>> weights;  // rank order, duplicates merged

  std::vector<double> probabilities() const;
};

KeywordSalience keyword_salience(const TopicCard& card, SalienceScheme scheme = SalienceScheme::reciprocal_rank);

struct ContextTopicDistribution {
  std::vector<std::pair<std::size_t, double>> probabilities;  // by card order

  std::vector<double> values() const;
};

/// Add-one smoothed share of assignment links per topic.
ContextTopicDistribution context_topic_distribution(const Assignment& assignment, const TopicSet& set);

nlohmann::ordered_json to_json(const TopicCard& card);
nlohmann::ordered_json to_json(const TopicSet& set);
TopicSet topic_set_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const ValidationReport& report);

}  // namespace topiccards
