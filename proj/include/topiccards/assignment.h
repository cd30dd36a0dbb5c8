#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "topiccards/corpus.h"

namespace topiccards {

struct TopicCard;
struct TopicSet;

/// True iff the keyword's token sequence occurs contiguously in the
/// document's tokens. Empty keywords never match.
bool match_keyword(const Document& doc, std::string_view keyword);

/// Inverted index over a corpus for fast phrase lookups. Borrows the corpus,
/// which must outlive it.
class KeywordMatcher {
 public:
  explicit KeywordMatcher(const Corpus& corpus);

  /// Corpus positions of documents matching `keyword`, ascending.
  std::vector<std::uint32_t> documents_matching(std::string_view keyword) const;
  bool matches(std::size_t position, std::string_view keyword) const;

  const Corpus& corpus() const noexcept { return corpus_; }

 private:
  const Corpus& corpus_;
  std::unordered_map<std::string, std::vector<std::uint32_t>> postings_;
};

struct AssignmentLink {
  std::string doc_id;
  std::size_t topic = 0;
  std::vector<std::string> matched_keywords;  // card order
  std::size_t hit_count = 0;

  bool operator==(const AssignmentLink&) const = default;
};

/// Links are sorted by (doc_id, topic); unassigned ids are sorted.
struct Assignment {
  std::vector<AssignmentLink> links;
  std::vector<std::string> unassigned;
  std::size_t threshold = 1;

  /// Topic indices linked to `doc_id`, ascending (the document's row of θ).
  std::vector<std::size_t> topics_for(const std::string& doc_id) const;
  bool operator==(const Assignment&) const = default;
};

/// Links a document to a topic when at least `threshold` distinct keywords of
/// the topic match it.
Assignment assign_documents(const Corpus& corpus, const TopicSet& set, std::size_t threshold = 1);
Assignment assign_documents(const KeywordMatcher& matcher, const TopicSet& set, std::size_t threshold = 1);

/// Keywords of one topic found in each of its assigned documents, plus their
/// normalized hit frequencies (the topic's empirical word profile).
struct TopicWordProfile {
  std::size_t topic = 0;
  std::vector<std::pair<std::string, std::vector<std::string>>> present_keywords;  // per doc_id

  std::vector<std::pair<std::string, double>> frequencies() const;
};

std::vector<TopicWordProfile> topic_word_profiles(const Assignment& assignment, const TopicSet& set);

struct CardAccuracy {
  std::size_t topic = 0;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::optional<double> value;

  bool operator==(const CardAccuracy&) const = default;
};

struct AccuracyReport {
  std::optional<double> overall;  // missing when no titles were claimed
  std::size_t correct = 0;
  std::size_t total = 0;
  std::vector<CardAccuracy> per_card;

  bool operator==(const AccuracyReport&) const = default;
};

/// Scores each (card, claimed source title) pair: correct iff the title
/// resolves to a corpus document containing at least one of the card's
/// keywords. Unresolvable titles count as wrong.
AccuracyReport assignment_accuracy(const TopicSet& set, const Corpus& corpus);
AccuracyReport assignment_accuracy(const TopicSet& set, const KeywordMatcher& matcher);

/// One JSON line per link followed by a trailing {"unassigned": [...]} record.
std::string to_jsonl(const Assignment& assignment);
Assignment assignment_from_jsonl(std::string_view text);

nlohmann::ordered_json to_json(const AccuracyReport& report);

}  // namespace topiccards
