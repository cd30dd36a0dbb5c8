#include "topiccards/topic_cards.h"

#include <algorithm>
#include <map>
#include <set>

#include "json_extract.h"
#include "topiccards/assignment.h"
#include "topiccards/errors.h"

namespace topiccards {

const std::string_view kGenerationPrompt =
    R"PROMPT(Please conduct thematic analysis on the provided text data to generate independent topics that balance generalization and specificity. IMPORTANT: For "Source Titles", ONLY copy exact titles from input data (look for "Title: [actual title]" lines). Output pure JSON format: [{"Topic 1": {"Summary": "One-sentence topic summary","Keywords": ["keyword1", "keyword2", "keyword3", "keyword4", "keyword5"],"Source Titles": ["Exact title 1", "Exact title 2", "Exact title 3"]}}]. Core requirements: minimum 3 topics, 5–12 keywords per topic, 3–8 exact source titles per topic, semantic coherence, minimized repetition, and no duplicated titles within the same topic.)PROMPT";

const std::string_view kGenerationSystemPrompt = "You are a careful thematic analyst. Output pure JSON only.";

namespace {

using ojson = nlohmann::ordered_json;

const ojson* field(const ojson& obj, std::initializer_list<std::string_view> names) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const auto key = detail::normalize_key(it.key());
    for (const auto name : names) {
      if (key == name) return &it.value();
    }
  }
  return nullptr;
}

const ojson* summary_field(const ojson& obj) { return field(obj, {"summary", "topicsummary"}); }
const ojson* keywords_field(const ojson& obj) { return field(obj, {"keywords", "keyword"}); }
const ojson* titles_field(const ojson& obj) {
  return field(obj, {"sourcetitles", "sourcetitle", "sources", "titles"});
}

bool looks_like_card(const ojson& obj) {
  return obj.is_object() && (summary_field(obj) != nullptr || keywords_field(obj) != nullptr);
}

std::vector<std::string> string_list(const ojson* value) {
  std::vector<std::string> out;
  if (value == nullptr) return out;
  const auto push = [&](std::string_view s) {
    const auto t = detail::trim(s);
    if (!t.empty()) out.emplace_back(t);
  };
  if (value->is_array()) {
    for (const auto& item : *value) {
      if (item.is_string()) push(item.get_ref<const std::string&>());
    }
  } else if (value->is_string()) {
    std::string_view rest = value->get_ref<const std::string&>();
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      push(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
  }
  return out;
}

void flag_bounds(TopicCard& card) {
  card.flags.clear();
  if (card.summary.empty()) card.flags.emplace_back("empty summary");
  if (card.keywords.size() < kMinKeywords || card.keywords.size() > kMaxKeywords) {
    card.flags.push_back("keyword count " + std::to_string(card.keywords.size()) + " outside [5, 12]");
  }
  if (card.source_titles.size() < kMinTitles || card.source_titles.size() > kMaxTitles) {
    card.flags.push_back("title count " + std::to_string(card.source_titles.size()) + " outside [3, 8]");
  }
  std::set<std::string_view> seen;
  for (const auto& title : card.source_titles) {
    if (!seen.insert(title).second) card.flags.push_back("duplicate title '" + title + "'");
  }
}

TopicCard card_from(const ojson& obj, std::size_t index) {
  TopicCard card;
  card.index = index;
  if (const auto* s = summary_field(obj); s != nullptr && s->is_string()) {
    card.summary = std::string(detail::trim(s->get_ref<const std::string&>()));
  }
  card.keywords = string_list(keywords_field(obj));
  card.source_titles = string_list(titles_field(obj));
  flag_bounds(card);
  return card;
}

// The card object inside one array element, if the element is a card.
const ojson* unwrap_card(const ojson& element) {
  if (!element.is_object()) return nullptr;
  if (looks_like_card(element)) return &element;
  if (element.size() == 1 && looks_like_card(element.begin().value())) return &element.begin().value();
  return nullptr;
}

std::vector<TopicCard> cards_from_array(const ojson& array) {
  std::vector<TopicCard> cards;
  for (const auto& element : array) {
    if (const auto* obj = unwrap_card(element)) cards.push_back(card_from(*obj, cards.size() + 1));
  }
  return cards;
}

std::optional<ojson> try_parse(std::string_view text) {
  try {
    return ojson::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    return std::nullopt;
  }
}

Provenance provenance_from(const ojson& obj) {
  Provenance p;
  if (const auto it = obj.find("provenance"); it != obj.end() && it->is_object()) {
    p.model = it->value("model", std::string());
    p.sample_id = it->value("sample_id", std::string());
    p.raw_digest = it->value("raw_digest", std::string());
  }
  return p;
}

// Whole-document JSON: a card array, {"topics": [...]}, or {"Topic 1": {...}, ...}.
std::optional<TopicSet> from_whole_document(const ojson& doc) {
  TopicSet set;
  if (doc.is_array()) {
    set.cards = cards_from_array(doc);
  } else if (doc.is_object()) {
    if (const auto* topics = field(doc, {"topics"}); topics != nullptr && topics->is_array()) {
      set.cards = cards_from_array(*topics);
      set.provenance = provenance_from(doc);
    } else {
      for (const auto& [key, value] : doc.items()) {
        if (looks_like_card(value)) set.cards.push_back(card_from(value, set.cards.size() + 1));
      }
    }
  }
  if (set.cards.empty()) return std::nullopt;
  return set;
}

std::optional<TopicSet> extract_from(std::string_view text) {
  if (auto doc = try_parse(detail::trim(text))) {
    if (auto set = from_whole_document(*doc)) return set;
  }
  for (const auto span : detail::balanced_spans(text, '[', ']')) {
    const auto array = try_parse(span);
    if (!array || !array->is_array()) continue;
    auto cards = cards_from_array(*array);
    if (!cards.empty()) return TopicSet{std::move(cards), {}};
  }
  return std::nullopt;
}

}  // namespace

std::size_t TopicSet::usable_count() const {
  return static_cast<std::size_t>(std::count_if(cards.begin(), cards.end(), [](const auto& c) { return c.usable(); }));
}

const TopicCard* TopicSet::find(std::size_t index) const {
  for (const auto& card : cards) {
    if (card.index == index) return &card;
  }
  return nullptr;
}

CompletionRequest build_generation_prompt(const SampleBlock& sample) {
  if (sample.doc_ids.empty() || sample.rendered_text.empty()) {
    throw std::invalid_argument("cannot build a generation prompt from an empty sample");
  }
  CompletionRequest request;
  request.system = std::string(kGenerationSystemPrompt);
  request.user = std::string(kGenerationPrompt) + "\n\n" + sample.rendered_text;
  return request;
}

TopicSet parse_topic_cards(std::string_view raw) {
  if (const auto fenced = detail::fenced_block(raw)) {
    if (auto set = extract_from(*fenced)) return *set;
  }
  if (auto set = extract_from(raw)) return *set;

  const bool any_array = !detail::balanced_spans(raw, '[', ']').empty();
  throw ParseFailure(any_array ? "JSON array found but it holds no recognizable topic cards"
                               : "no balanced JSON array in model output",
                     detail::excerpt(raw));
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::too_few_topics: return "too_few_topics";
    case ViolationKind::keyword_count: return "keyword_count";
    case ViolationKind::title_count: return "title_count";
    case ViolationKind::duplicate_title: return "duplicate_title";
    case ViolationKind::hallucinated_title: return "hallucinated_title";
    case ViolationKind::empty_summary: return "empty_summary";
  }
  return "unknown";
}

std::size_t ValidationReport::count(ViolationKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(violations.begin(), violations.end(), [&](const Violation& v) { return v.kind == kind; }));
}

ValidationReport validate_topic_set(const TopicSet& set, const Corpus& corpus) {
  ValidationReport report;
  auto add = [&](ViolationKind kind, std::optional<std::size_t> topic, std::string detail) {
    report.violations.push_back({kind, topic, std::move(detail)});
  };

  if (set.cards.size() < kMinTopics) {
    add(ViolationKind::too_few_topics, std::nullopt,
        std::to_string(set.cards.size()) + " topic(s), at least 3 required");
  }
  std::size_t total_keywords = 0;
  std::set<std::string> distinct_keywords;
  for (const auto& card : set.cards) {
    if (card.summary.empty()) add(ViolationKind::empty_summary, card.index, "summary is empty");
    const auto kw = card.keywords.size();
    if (kw < kMinKeywords || kw > kMaxKeywords) {
      add(ViolationKind::keyword_count, card.index, std::to_string(kw) + " keywords, expected 5-12");
    }
    const auto titles = card.source_titles.size();
    if (titles < kMinTitles || titles > kMaxTitles) {
      add(ViolationKind::title_count, card.index, std::to_string(titles) + " source titles, expected 3-8");
    }
    std::set<std::string_view> seen;
    std::set<std::string_view> reported_missing;
    for (const auto& title : card.source_titles) {
      if (!seen.insert(title).second) {
        add(ViolationKind::duplicate_title, card.index, title);
      } else if (!corpus.has_title(title) && reported_missing.insert(title).second) {
        add(ViolationKind::hallucinated_title, card.index, title);
      }
    }
    for (const auto& keyword : card.keywords) {
      distinct_keywords.insert(fold_case(keyword));
      ++total_keywords;
    }
  }
  if (total_keywords > 0) {
    report.keyword_repetition_rate =
        1.0 - static_cast<double>(distinct_keywords.size()) / static_cast<double>(total_keywords);
  }
  return report;
}

std::string to_string(SalienceScheme scheme) {
  return scheme == SalienceScheme::reciprocal_rank ? "reciprocal_rank" : "uniform";
}

SalienceScheme parse_salience_scheme(std::string_view name) {
  if (name == "reciprocal_rank") return SalienceScheme::reciprocal_rank;
  if (name == "uniform") return SalienceScheme::uniform;
  throw ConfigError("unknown salience scheme '" + std::string(name) + "'");
}

std::vector<double> KeywordSalience::probabilities() const {
  std::vector<double> out;
  out.reserve(weights.size());
  for (const auto& [word, w] : weights) out.push_back(w);
  return out;
}

KeywordSalience keyword_salience(const TopicCard& card, SalienceScheme scheme) {
  if (card.keywords.empty()) throw std::invalid_argument("topic card has no keywords");
  KeywordSalience salience;
  salience.topic = card.index;
  double total = 0.0;
  for (std::size_t rank = 1; rank <= card.keywords.size(); ++rank) {
    const double raw = scheme == SalienceScheme::reciprocal_rank ? 1.0 / static_cast<double>(rank) : 1.0;
    const auto& word = card.keywords[rank - 1];
    const auto it = std::find_if(salience.weights.begin(), salience.weights.end(),
                                 [&](const auto& entry) { return entry.first == word; });
    if (it == salience.weights.end()) {
      salience.weights.emplace_back(word, raw);
    } else {
      it->second += raw;
    }
    total += raw;
  }
  for (auto& [word, w] : salience.weights) w /= total;
  return salience;
}

std::vector<double> ContextTopicDistribution::values() const {
  std::vector<double> out;
  out.reserve(probabilities.size());
  for (const auto& [topic, p] : probabilities) out.push_back(p);
  return out;
}

ContextTopicDistribution context_topic_distribution(const Assignment& assignment, const TopicSet& set) {
  std::map<std::size_t, std::size_t> links;
  for (const auto& link : assignment.links) ++links[link.topic];
  double total = 0.0;
  ContextTopicDistribution dist;
  for (const auto& card : set.cards) {
    const double count = static_cast<double>(links[card.index] + 1);
    dist.probabilities.emplace_back(card.index, count);
    total += count;
  }
  for (auto& [topic, p] : dist.probabilities) p /= total;
  return dist;
}

nlohmann::ordered_json to_json(const TopicCard& card) {
  ojson j;
  j["index"] = card.index;
  j["summary"] = card.summary;
  j["keywords"] = card.keywords;
  j["source_titles"] = card.source_titles;
  return j;
}

nlohmann::ordered_json to_json(const TopicSet& set) {
  ojson j;
  j["provenance"] = {{"model", set.provenance.model},
                     {"sample_id", set.provenance.sample_id},
                     {"raw_digest", set.provenance.raw_digest}};
  j["topics"] = ojson::array();
  for (const auto& card : set.cards) j["topics"].push_back(to_json(card));
  return j;
}

TopicSet topic_set_from_json(const nlohmann::json& j) {
  const auto doc = ojson::parse(j.dump());
  if (auto set = from_whole_document(doc)) return *set;
  throw ParseFailure("topics document holds no topic cards", detail::excerpt(j.dump()));
}

nlohmann::ordered_json to_json(const ValidationReport& report) {
  ojson j;
  j["ok"] = report.ok();
  j["keyword_repetition_rate"] = report.keyword_repetition_rate;
  j["violations"] = ojson::array();
  for (const auto& v : report.violations) {
    ojson entry;
    entry["kind"] = to_string(v.kind);
    entry["topic"] = v.topic ? ojson(*v.topic) : ojson(nullptr);
    entry["detail"] = v.detail;
    j["violations"].push_back(std::move(entry));
  }
  return j;
}

}  // namespace topiccards
