#include "topiccards/assignment.h"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "topiccards/errors.h"
#include "topiccards/topic_cards.h"

namespace topiccards {

namespace {

bool contains_sequence(const std::vector<std::string>& haystack, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string key;
  for (const auto& t : tokens) {
    key += t;
    key.push_back('\x1f');
  }
  return key;
}

}  // namespace

bool match_keyword(const Document& doc, std::string_view keyword) {
  return contains_sequence(doc.tokens, tokenize(keyword));
}

KeywordMatcher::KeywordMatcher(const Corpus& corpus) : corpus_(corpus) {
  const auto& docs = corpus.documents();
  for (std::uint32_t pos = 0; pos < docs.size(); ++pos) {
    for (const auto& token : docs[pos].tokens) {
      auto& list = postings_[token];
      if (list.empty() || list.back() != pos) list.push_back(pos);
    }
  }
}

std::vector<std::uint32_t> KeywordMatcher::documents_matching(std::string_view keyword) const {
  const auto tokens = tokenize(keyword);
  if (tokens.empty()) return {};
  const std::vector<std::uint32_t>* rarest = nullptr;
  for (const auto& token : tokens) {
    const auto it = postings_.find(token);
    if (it == postings_.end()) return {};
    if (rarest == nullptr || it->second.size() < rarest->size()) rarest = &it->second;
  }
  if (tokens.size() == 1) return *rarest;
  std::vector<std::uint32_t> out;
  for (const auto pos : *rarest) {
    if (contains_sequence(corpus_.documents()[pos].tokens, tokens)) out.push_back(pos);
  }
  return out;
}

bool KeywordMatcher::matches(std::size_t position, std::string_view keyword) const {
  return match_keyword(corpus_.documents().at(position), keyword);
}

std::vector<std::size_t> Assignment::topics_for(const std::string& doc_id) const {
  std::vector<std::size_t> topics;
  for (const auto& link : links) {
    if (link.doc_id == doc_id) topics.push_back(link.topic);
  }
  std::sort(topics.begin(), topics.end());
  return topics;
}

Assignment assign_documents(const Corpus& corpus, const TopicSet& set, std::size_t threshold) {
  return assign_documents(KeywordMatcher(corpus), set, threshold);
}

Assignment assign_documents(const KeywordMatcher& matcher, const TopicSet& set, std::size_t threshold) {
  if (threshold < 1) throw std::invalid_argument("assignment threshold must be at least 1");
  const auto& docs = matcher.corpus().documents();
  Assignment assignment;
  assignment.threshold = threshold;
  std::vector<bool> linked(docs.size(), false);

  for (const auto& card : set.cards) {
    std::set<std::string> seen_phrases;
    std::map<std::uint32_t, std::vector<std::string>> hits;
    for (const auto& keyword : card.keywords) {
      const auto tokens = tokenize(keyword);
      if (tokens.empty() || !seen_phrases.insert(join_tokens(tokens)).second) continue;
      for (const auto pos : matcher.documents_matching(keyword)) hits[pos].push_back(keyword);
    }
    for (auto& [pos, matched] : hits) {
      if (matched.size() < threshold) continue;
      linked[pos] = true;
      const auto count = matched.size();
      assignment.links.push_back({docs[pos].id, card.index, std::move(matched), count});
    }
  }
  std::sort(assignment.links.begin(), assignment.links.end(), [](const auto& a, const auto& b) {
    return a.doc_id != b.doc_id ? a.doc_id < b.doc_id : a.topic < b.topic;
  });
  for (std::size_t pos = 0; pos < docs.size(); ++pos) {
    if (!linked[pos]) assignment.unassigned.push_back(docs[pos].id);
  }
  std::sort(assignment.unassigned.begin(), assignment.unassigned.end());
  return assignment;
}

std::vector<std::pair<std::string, double>> TopicWordProfile::frequencies() const {
  std::vector<std::pair<std::string, double>> out;
  double total = 0.0;
  for (const auto& [doc, keywords] : present_keywords) {
    for (const auto& keyword : keywords) {
      const auto it = std::find_if(out.begin(), out.end(), [&](const auto& e) { return e.first == keyword; });
      if (it == out.end()) {
        out.emplace_back(keyword, 1.0);
      } else {
        it->second += 1.0;
      }
      total += 1.0;
    }
  }
  for (auto& [keyword, f] : out) f /= total;
  return out;
}

std::vector<TopicWordProfile> topic_word_profiles(const Assignment& assignment, const TopicSet& set) {
  std::vector<TopicWordProfile> profiles;
  for (const auto& card : set.cards) {
    TopicWordProfile profile;
    profile.topic = card.index;
    for (const auto& link : assignment.links) {
      if (link.topic == card.index) profile.present_keywords.emplace_back(link.doc_id, link.matched_keywords);
    }
    profiles.push_back(std::move(profile));
  }
  return profiles;
}

AccuracyReport assignment_accuracy(const TopicSet& set, const Corpus& corpus) {
  return assignment_accuracy(set, KeywordMatcher(corpus));
}

AccuracyReport assignment_accuracy(const TopicSet& set, const KeywordMatcher& matcher) {
  const auto& corpus = matcher.corpus();
  AccuracyReport report;
  for (const auto& card : set.cards) {
    CardAccuracy entry;
    entry.topic = card.index;
    for (const auto& title : card.source_titles) {
      ++entry.total;
      const auto& ids = corpus.ids_for_title(title);
      const bool correct = std::any_of(ids.begin(), ids.end(), [&](const std::string& id) {
        const auto* doc = corpus.find(id);
        return std::any_of(card.keywords.begin(), card.keywords.end(),
                           [&](const std::string& kw) { return match_keyword(*doc, kw); });
      });
      if (correct) ++entry.correct;
    }
    if (entry.total > 0) entry.value = static_cast<double>(entry.correct) / static_cast<double>(entry.total);
    report.correct += entry.correct;
    report.total += entry.total;
    report.per_card.push_back(entry);
  }
  if (report.total > 0) report.overall = static_cast<double>(report.correct) / static_cast<double>(report.total);
  return report;
}

std::string to_jsonl(const Assignment& assignment) {
  std::string out;
  for (const auto& link : assignment.links) {
    nlohmann::ordered_json j;
    j["doc_id"] = link.doc_id;
    j["topic"] = link.topic;
    j["matched_keywords"] = link.matched_keywords;
    j["hits"] = link.hit_count;
    out += j.dump();
    out.push_back('\n');
  }
  nlohmann::ordered_json tail;
  tail["unassigned"] = assignment.unassigned;
  tail["threshold"] = assignment.threshold;
  out += tail.dump();
  out.push_back('\n');
  return out;
}

Assignment assignment_from_jsonl(std::string_view text) {
  Assignment assignment;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error("assignment line " + std::to_string(line_no) + ": " + e.what());
    }
    if (j.contains("unassigned")) {
      assignment.unassigned = j.at("unassigned").get<std::vector<std::string>>();
      assignment.threshold = j.value("threshold", std::size_t{1});
      continue;
    }
    assignment.links.push_back({j.at("doc_id").get<std::string>(), j.at("topic").get<std::size_t>(),
                                j.at("matched_keywords").get<std::vector<std::string>>(),
                                j.at("hits").get<std::size_t>()});
  }
  return assignment;
}

nlohmann::ordered_json to_json(const AccuracyReport& report) {
  nlohmann::ordered_json j;
  j["overall"] = report.overall ? nlohmann::ordered_json(*report.overall) : nlohmann::ordered_json(nullptr);
  j["correct"] = report.correct;
  j["total"] = report.total;
  j["per_card"] = nlohmann::ordered_json::array();
  for (const auto& c : report.per_card) {
    nlohmann::ordered_json e;
    e["topic"] = c.topic;
    e["correct"] = c.correct;
    e["total"] = c.total;
    e["value"] = c.value ? nlohmann::ordered_json(*c.value) : nlohmann::ordered_json(nullptr);
    j["per_card"].push_back(std::move(e));
  }
  return j;
}

}  // namespace topiccards
