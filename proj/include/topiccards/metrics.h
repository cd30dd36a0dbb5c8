#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "topiccards/assignment.h"
#include "topiccards/judge.h"
#include "topiccards/topic_cards.h"

namespace topiccards {

inline constexpr double kDefaultNpmiEpsilon = 1e-12;
inline constexpr std::size_t kDefaultTopN = 10;
inline constexpr std::size_t kDefaultTopK = 10;

/// Document-level co-occurrence counts for keyword units (whole phrases,
/// matched with match_keyword) over a full corpus.
class CooccurrenceTable {
 public:
  std::size_t doc_count() const noexcept { return doc_count_; }
  const std::vector<std::string>& units() const noexcept { return units_; }

  /// 0 for units that were not counted.
  std::size_t df(std::string_view unit) const;
  /// Joint document frequency; symmetric; co_df(a, a) == df(a).
  std::size_t co_df(std::string_view a, std::string_view b) const;
  /// Number of unordered pairs with a non-zero joint count.
  std::size_t stored_pairs() const noexcept { return co_df_.size(); }

 private:
  friend CooccurrenceTable build_cooccurrence(const KeywordMatcher& matcher, const std::set<std::string>& units);

  std::optional<std::size_t> index_of(std::string_view unit) const;

  std::size_t doc_count_ = 0;
  std::vector<std::string> units_;  // sorted
  std::vector<std::size_t> df_;
  std::unordered_map<std::uint64_t, std::size_t> co_df_;  // key: lo * |units| + hi
};

CooccurrenceTable build_cooccurrence(const Corpus& corpus, const std::set<std::string>& units);
CooccurrenceTable build_cooccurrence(const KeywordMatcher& matcher, const std::set<std::string>& units);

/// log(P(a,b) / (P(a) P(b))) / -log P(a,b) with P(a,b) = (co_df + eps) / N,
/// clamped to [-1, 1]. nullopt when either unit never occurs. A pair present
/// in every document scores 1.
std::optional<double> npmi_pair(const CooccurrenceTable& table, std::string_view a, std::string_view b,
                                double eps = kDefaultNpmiEpsilon);

struct TopicNpmi {
  std::size_t topic = 0;
  std::optional<double> value;
  double coverage = 0.0;  // share of the considered keywords with df > 0
  std::size_t pairs = 0;

  bool operator==(const TopicNpmi&) const = default;
};

/// Mean NPMI over pairs of the card's first `top_n` distinct keywords that
/// occur in the corpus. Missing when fewer than two of them occur.
TopicNpmi topic_npmi(const CooccurrenceTable& table, const TopicCard& card, std::size_t top_n = kDefaultTopN,
                     double eps = kDefaultNpmiEpsilon);

struct SetNpmi {
  std::optional<double> mean;  // over non-missing topics
  std::vector<TopicNpmi> per_topic;
  std::size_t top_n = kDefaultTopN;
  double eps = kDefaultNpmiEpsilon;

  bool operator==(const SetNpmi&) const = default;
};

SetNpmi set_npmi(const CooccurrenceTable& table, const TopicSet& set, std::size_t top_n = kDefaultTopN,
                 double eps = kDefaultNpmiEpsilon);

/// Every keyword of every card, as co-occurrence units.
std::set<std::string> keyword_units(const TopicSet& set);

/// Unique case-folded keywords divided by keywords taken, using each card's
/// first `top_k` keywords.
double topic_diversity(const TopicSet& set, std::size_t top_k = kDefaultTopK);

/// Shannon entropy in nats, 0 log 0 = 0. Throws std::domain_error when an
/// entry is negative or the entries do not sum to 1 within 1e-9.
double entropy(std::span<const double> probabilities);

struct TopicValue {
  std::size_t topic = 0;
  std::optional<double> value;

  bool operator==(const TopicValue&) const = default;
};

struct MetricsReport {
  std::optional<SetNpmi> npmi;
  std::optional<double> diversity;
  std::size_t diversity_top_k = kDefaultTopK;
  std::optional<double> topic_entropy;
  std::vector<TopicValue> word_entropies;
  std::optional<AccuracyReport> assignment_accuracy;
  std::optional<JudgeAggregate> judge;
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();

  bool operator==(const MetricsReport&) const = default;
};

struct ReportInputs {
  std::optional<SetNpmi> npmi;
  std::optional<double> diversity;
  std::size_t diversity_top_k = kDefaultTopK;
  std::optional<ContextTopicDistribution> topic_distribution;
  std::vector<KeywordSalience> saliences;
  std::optional<AccuracyReport> assignment_accuracy;
  std::optional<JudgeAggregate> judge;
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
};

/// Assembles the report, computing both entropy measures. Absent inputs stay
/// missing. Throws std::invalid_argument when nothing was computed.
MetricsReport build_report(const ReportInputs& inputs);

struct EvaluationOptions {
  std::size_t top_n = kDefaultTopN;
  std::size_t top_k = kDefaultTopK;
  double eps = kDefaultNpmiEpsilon;
  SalienceScheme salience = SalienceScheme::reciprocal_rank;
};

/// Everything except the judge: NPMI, diversity, entropies, accuracy.
ReportInputs evaluate(const KeywordMatcher& matcher, const TopicSet& set, const Assignment& assignment,
                      const EvaluationOptions& options = {});

nlohmann::ordered_json to_json(const MetricsReport& report);
MetricsReport metrics_report_from_json(const nlohmann::ordered_json& j);

/// Columns: model, NPMI, diversity, coherence, concise, informative,
/// assignment accuracy. Missing values are empty cells.
std::string csv_header();
std::string to_csv_row(const MetricsReport& report);

}  // namespace topiccards
