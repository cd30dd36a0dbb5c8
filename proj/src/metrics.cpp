#include "topiccards/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace topiccards {

namespace {

using ojson = nlohmann::ordered_json;

ojson optional_number(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

std::optional<double> read_optional(const ojson& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

std::string format_cell(const std::optional<double>& v, int decimals) {
  if (!v) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, *v);
  return buf;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::optional<std::size_t> CooccurrenceTable::index_of(std::string_view unit) const {
  const auto it = std::lower_bound(units_.begin(), units_.end(), unit);
  if (it == units_.end() || *it != unit) return std::nullopt;
  return static_cast<std::size_t>(it - units_.begin());
}

std::size_t CooccurrenceTable::df(std::string_view unit) const {
  const auto i = index_of(unit);
  return i ? df_[*i] : 0;
}

std::size_t CooccurrenceTable::co_df(std::string_view a, std::string_view b) const {
  const auto ia = index_of(a);
  const auto ib = index_of(b);
  if (!ia || !ib) return 0;
  if (*ia == *ib) return df_[*ia];
  const auto lo = std::min(*ia, *ib);
  const auto hi = std::max(*ia, *ib);
  const auto it = co_df_.find(static_cast<std::uint64_t>(lo) * units_.size() + hi);
  return it == co_df_.end() ? 0 : it->second;
}

CooccurrenceTable build_cooccurrence(const Corpus& corpus, const std::set<std::string>& units) {
  return build_cooccurrence(KeywordMatcher(corpus), units);
}

CooccurrenceTable build_cooccurrence(const KeywordMatcher& matcher, const std::set<std::string>& units) {
  if (units.empty()) throw std::invalid_argument("co-occurrence table needs at least one unit");
  CooccurrenceTable table;
  table.doc_count_ = matcher.corpus().size();
  table.units_.assign(units.begin(), units.end());
  table.df_.assign(table.units_.size(), 0);

  std::vector<std::vector<std::uint32_t>> units_in_doc(table.doc_count_);
  for (std::uint32_t u = 0; u < table.units_.size(); ++u) {
    const auto docs = matcher.documents_matching(table.units_[u]);
    table.df_[u] = docs.size();
    for (const auto pos : docs) units_in_doc[pos].push_back(u);
  }
  const std::uint64_t width = table.units_.size();
  for (const auto& present : units_in_doc) {
    for (std::size_t i = 0; i < present.size(); ++i) {
      for (std::size_t j = i + 1; j < present.size(); ++j) ++table.co_df_[present[i] * width + present[j]];
    }
  }
  return table;
}

std::optional<double> npmi_pair(const CooccurrenceTable& table, std::string_view a, std::string_view b,
                                double eps) {
  const auto df_a = table.df(a);
  const auto df_b = table.df(b);
  if (df_a == 0 || df_b == 0) return std::nullopt;
  const auto n = static_cast<double>(table.doc_count());
  const auto co = table.co_df(a, b);
  if (co == table.doc_count()) return 1.0;

  const double p_a = static_cast<double>(df_a) / n;
  const double p_b = static_cast<double>(df_b) / n;
  const double p_ab = (static_cast<double>(co) + eps) / n;
  const double value = std::log(p_ab / (p_a * p_b)) / -std::log(p_ab);
  return std::clamp(value, -1.0, 1.0);
}

TopicNpmi topic_npmi(const CooccurrenceTable& table, const TopicCard& card, std::size_t top_n, double eps) {
  if (top_n < 2) throw std::invalid_argument("top_n must be at least 2");
  std::vector<std::string_view> considered;
  for (const auto& kw : card.keywords) {
    if (considered.size() == top_n) break;
    if (std::find(considered.begin(), considered.end(), kw) == considered.end()) considered.push_back(kw);
  }
  std::vector<std::string_view> present;
  for (const auto kw : considered) {
    if (table.df(kw) > 0) present.push_back(kw);
  }

  TopicNpmi result;
  result.topic = card.index;
  if (!considered.empty()) {
    result.coverage = static_cast<double>(present.size()) / static_cast<double>(considered.size());
  }
  if (present.size() < 2) return result;
  double sum = 0.0;
  for (std::size_t i = 0; i < present.size(); ++i) {
    for (std::size_t j = i + 1; j < present.size(); ++j) {
      sum += *npmi_pair(table, present[i], present[j], eps);
      ++result.pairs;
    }
  }
  result.value = sum / static_cast<double>(result.pairs);
  return result;
}

SetNpmi set_npmi(const CooccurrenceTable& table, const TopicSet& set, std::size_t top_n, double eps) {
  SetNpmi out;
  out.top_n = top_n;
  out.eps = eps;
  double sum = 0.0;
  std::size_t counted = 0;
  for (const auto& card : set.cards) {
    auto topic = topic_npmi(table, card, top_n, eps);
    if (topic.value) {
      sum += *topic.value;
      ++counted;
    }
    out.per_topic.push_back(std::move(topic));
  }
  if (counted > 0) out.mean = sum / static_cast<double>(counted);
  return out;
}

std::set<std::string> keyword_units(const TopicSet& set) {
  std::set<std::string> units;
  for (const auto& card : set.cards) units.insert(card.keywords.begin(), card.keywords.end());
  return units;
}

double topic_diversity(const TopicSet& set, std::size_t top_k) {
  if (top_k < 1) throw std::invalid_argument("top_k must be at least 1");
  std::set<std::string> distinct;
  std::size_t taken = 0;
  for (const auto& card : set.cards) {
    const auto n = std::min(top_k, card.keywords.size());
    for (std::size_t i = 0; i < n; ++i) distinct.insert(fold_case(card.keywords[i]));
    taken += n;
  }
  if (taken == 0) throw std::invalid_argument("topic diversity needs at least one keyword");
  return static_cast<double>(distinct.size()) / static_cast<double>(taken);
}

double entropy(std::span<const double> probabilities) {
  double sum = 0.0;
  for (const double p : probabilities) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw std::domain_error("probability entries must be non-negative");
    sum += p;
  }
  if (std::fabs(sum - 1.0) > 1e-9) {
    throw std::domain_error("probabilities sum to " + std::to_string(sum) + ", not 1");
  }
  const bool uniform = std::all_of(probabilities.begin(), probabilities.end(),
                                   [&](double p) { return p == probabilities.front(); });
  if (uniform) return std::log(static_cast<double>(probabilities.size()));

  double h = 0.0;
  for (const double p : probabilities) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

MetricsReport build_report(const ReportInputs& in) {
  const bool anything = in.npmi || in.diversity || in.topic_distribution || !in.saliences.empty() ||
                        in.assignment_accuracy || in.judge;
  if (!anything) throw std::invalid_argument("build_report needs at least one computed metric");

  MetricsReport report;
  report.npmi = in.npmi;
  report.diversity = in.diversity;
  report.diversity_top_k = in.diversity_top_k;
  if (in.topic_distribution) report.topic_entropy = entropy(in.topic_distribution->values());
  for (const auto& salience : in.saliences) {
    const auto probs = salience.probabilities();
    report.word_entropies.push_back({salience.topic, entropy(probs)});
  }
  report.assignment_accuracy = in.assignment_accuracy;
  report.judge = in.judge;
  report.metadata = in.metadata;
  return report;
}

ReportInputs evaluate(const KeywordMatcher& matcher, const TopicSet& set, const Assignment& assignment,
                      const EvaluationOptions& options) {
  ReportInputs in;
  const auto units = keyword_units(set);
  if (!units.empty()) {
    const auto table = build_cooccurrence(matcher, units);
    in.npmi = set_npmi(table, set, options.top_n, options.eps);
    in.diversity = topic_diversity(set, options.top_k);
  }
  in.diversity_top_k = options.top_k;
  if (!set.cards.empty()) in.topic_distribution = context_topic_distribution(assignment, set);
  for (const auto& card : set.cards) {
    if (!card.keywords.empty()) in.saliences.push_back(keyword_salience(card, options.salience));
  }
  in.assignment_accuracy = assignment_accuracy(set, matcher);
  in.metadata["log_base"] = "e";
  in.metadata["salience_scheme"] = to_string(options.salience);
  in.metadata["topics"] = set.cards.size();
  in.metadata["assignment_threshold"] = assignment.threshold;
  in.metadata["assignment_links"] = assignment.links.size();
  in.metadata["unassigned_documents"] = assignment.unassigned.size();
  return in;
}

nlohmann::ordered_json to_json(const MetricsReport& report) {
  ojson j;
  j["metadata"] = report.metadata;
  if (report.npmi) {
    ojson npmi;
    npmi["mean"] = optional_number(report.npmi->mean);
    npmi["top_n"] = report.npmi->top_n;
    npmi["eps"] = report.npmi->eps;
    npmi["per_topic"] = ojson::array();
    for (const auto& t : report.npmi->per_topic) {
      ojson e;
      e["topic"] = t.topic;
      e["value"] = optional_number(t.value);
      e["coverage"] = t.coverage;
      e["pairs"] = t.pairs;
      npmi["per_topic"].push_back(std::move(e));
    }
    j["npmi"] = std::move(npmi);
  } else {
    j["npmi"] = nullptr;
  }
  j["diversity"] = {{"value", optional_number(report.diversity)}, {"top_k", report.diversity_top_k}};
  j["topic_entropy"] = optional_number(report.topic_entropy);
  j["word_entropies"] = ojson::array();
  for (const auto& w : report.word_entropies) {
    j["word_entropies"].push_back({{"topic", w.topic}, {"value", optional_number(w.value)}});
  }
  j["assignment_accuracy"] = report.assignment_accuracy ? to_json(*report.assignment_accuracy) : ojson(nullptr);
  j["judge"] = report.judge ? to_json(*report.judge) : ojson(nullptr);
  return j;
}

MetricsReport metrics_report_from_json(const nlohmann::ordered_json& j) {
  MetricsReport r;
  r.metadata = j.value("metadata", ojson::object());
  if (const auto& n = j.at("npmi"); !n.is_null()) {
    SetNpmi npmi;
    npmi.mean = read_optional(n, "mean");
    npmi.top_n = n.at("top_n").get<std::size_t>();
    npmi.eps = n.at("eps").get<double>();
    for (const auto& e : n.at("per_topic")) {
      npmi.per_topic.push_back({e.at("topic").get<std::size_t>(), read_optional(e, "value"),
                                e.at("coverage").get<double>(), e.at("pairs").get<std::size_t>()});
    }
    r.npmi = std::move(npmi);
  }
  r.diversity = read_optional(j.at("diversity"), "value");
  r.diversity_top_k = j.at("diversity").at("top_k").get<std::size_t>();
  r.topic_entropy = read_optional(j, "topic_entropy");
  for (const auto& w : j.at("word_entropies")) {
    r.word_entropies.push_back({w.at("topic").get<std::size_t>(), read_optional(w, "value")});
  }
  if (const auto& a = j.at("assignment_accuracy"); !a.is_null()) {
    AccuracyReport acc;
    acc.overall = read_optional(a, "overall");
    acc.correct = a.at("correct").get<std::size_t>();
    acc.total = a.at("total").get<std::size_t>();
    for (const auto& c : a.at("per_card")) {
      acc.per_card.push_back({c.at("topic").get<std::size_t>(), c.at("correct").get<std::size_t>(),
                              c.at("total").get<std::size_t>(), read_optional(c, "value")});
    }
    r.assignment_accuracy = std::move(acc);
  }
  if (const auto& jg = j.at("judge"); !jg.is_null()) r.judge = judge_aggregate_from_json(nlohmann::json::parse(jg.dump()));
  return r;
}

std::string csv_header() { return "model,npmi,diversity,coherence,concise,informative,assignment_accuracy"; }

std::string to_csv_row(const MetricsReport& report) {
  const auto model = report.metadata.contains("model") ? report.metadata["model"].get<std::string>() : "";
  std::string row = csv_escape(model);
  row += "," + format_cell(report.npmi ? report.npmi->mean : std::nullopt, 4);
  row += "," + format_cell(report.diversity, 4);
  const auto judge = [&](double JudgeAggregate::*field) {
    return report.judge ? std::optional<double>(report.judge.value().*field) : std::nullopt;
  };
  row += "," + format_cell(judge(&JudgeAggregate::coherence), 3);
  row += "," + format_cell(judge(&JudgeAggregate::concise), 3);
  row += "," + format_cell(judge(&JudgeAggregate::informative), 3);
  row += "," + format_cell(report.assignment_accuracy ? report.assignment_accuracy->overall : std::nullopt, 4);
  return row;
}

}  // namespace topiccards
