#include "topiccards/corpus.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "topiccards/errors.h"
#include "unicode.h"

namespace topiccards {

namespace {

struct TokenSpan {
  std::size_t begin;
  std::size_t end;
  std::string lowered;
};

std::vector<TokenSpan> tokenize_spans(std::string_view text) {
  std::vector<TokenSpan> spans;
  std::size_t pos = 0;
  bool in_token = false;
  TokenSpan current{};
  while (pos < text.size()) {
    const std::size_t start = pos;
    const auto cp = unicode::decode_next(text, pos);
    const bool word = cp.has_value() && unicode::is_word_char(*cp);
    if (word) {
      if (!in_token) {
        current = TokenSpan{start, start, {}};
        in_token = true;
      }
      unicode::append_utf8(current.lowered, unicode::to_lower(*cp));
      current.end = pos;
    } else if (in_token) {
      spans.push_back(std::move(current));
      in_token = false;
    }
  }
  if (in_token) spans.push_back(std::move(current));
  return spans;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

std::optional<std::string> optional_string(const nlohmann::json& obj, const char* key,
                                           std::size_t line_no) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw CorpusError("line " + std::to_string(line_no) + ": \"" + key + "\" must be a string");
  }
  return it->get<std::string>();
}

const std::vector<std::string> kNoIds;

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  for (auto& span : tokenize_spans(text)) tokens.push_back(std::move(span.lowered));
  return tokens;
}

std::string fold_case(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t start = pos;
    const auto cp = unicode::decode_next(text, pos);
    if (cp) {
      unicode::append_utf8(out, unicode::to_lower(*cp));
    } else {
      out.append(text.substr(start, pos - start));
    }
  }
  return out;
}

std::size_t count_whitespace_tokens(std::string_view text) {
  std::size_t count = 0;
  bool in_token = false;
  for (const unsigned char c : text) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_token) ++count;
    in_token = !space;
  }
  return count;
}

Document Document::make(std::string id, std::string title, std::optional<std::string> body,
                        std::optional<std::string> label) {
  Document doc;
  doc.id = std::move(id);
  doc.title = std::move(title);
  doc.body = std::move(body);
  doc.label = std::move(label);
  doc.tokens = tokenize(doc.tokenized_text());
  return doc;
}

std::string Document::tokenized_text() const {
  if (!body || body->empty()) return title;
  return title + "\n" + *body;
}

Vocabulary::Vocabulary(const std::vector<Document>& documents) {
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& doc : documents) {
    std::unordered_set<std::string_view> seen(doc.tokens.begin(), doc.tokens.end());
    for (const auto word : seen) ++df[std::string(word)];
  }
  std::vector<std::pair<std::string, std::size_t>> entries(df.begin(), df.end());
  std::sort(entries.begin(), entries.end());
  words_.reserve(entries.size());
  doc_frequency_.reserve(entries.size());
  for (auto& [word, count] : entries) {
    words_.push_back(std::move(word));
    doc_frequency_.push_back(count);
  }
}

bool Vocabulary::contains(std::string_view word) const {
  return std::binary_search(words_.begin(), words_.end(), word);
}

std::size_t Vocabulary::doc_frequency(std::string_view word) const {
  const auto it = std::lower_bound(words_.begin(), words_.end(), word);
  if (it == words_.end() || *it != word) return 0;
  return doc_frequency_[static_cast<std::size_t>(it - words_.begin())];
}

Corpus Corpus::from_documents(std::vector<Document> documents) {
  if (documents.empty()) throw CorpusError("corpus has no documents");
  Corpus corpus;
  for (std::size_t i = 0; i < documents.size(); ++i) {
    const auto& doc = documents[i];
    if (doc.id.empty()) throw CorpusError("document " + std::to_string(i + 1) + " has an empty id");
    if (is_blank(doc.title)) throw CorpusError("document '" + doc.id + "' has an empty title");
    if (!corpus.position_.emplace(doc.id, i).second) {
      throw CorpusError("duplicate id '" + doc.id + "'");
    }
    corpus.title_index_[doc.title].push_back(doc.id);
  }
  corpus.vocabulary_ = Vocabulary(documents);
  corpus.documents_ = std::move(documents);
  return corpus;
}

const std::vector<std::string>& Corpus::ids_for_title(const std::string& title) const {
  const auto it = title_index_.find(title);
  return it == title_index_.end() ? kNoIds : it->second;
}

const Document* Corpus::find(const std::string& id) const {
  const auto it = position_.find(id);
  return it == position_.end() ? nullptr : &documents_[it->second];
}

std::size_t Corpus::position_of(const std::string& id) const {
  const auto it = position_.find(id);
  if (it == position_.end()) throw CorpusError("unknown document id '" + id + "'");
  return it->second;
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  if (format != CorpusFormat::jsonl) throw CorpusError("unsupported corpus format");
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file " + path.string());

  std::vector<Document> documents;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw CorpusError("line " + std::to_string(line_no) + ": malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) throw CorpusError("line " + std::to_string(line_no) + ": not a JSON object");

    const auto id_it = obj.find("id");
    if (id_it == obj.end() || !id_it->is_string() || id_it->get_ref<const std::string&>().empty()) {
      throw CorpusError("line " + std::to_string(line_no) + ": missing or empty \"id\"");
    }
    const auto title_it = obj.find("title");
    if (title_it == obj.end() || !title_it->is_string() ||
        is_blank(title_it->get_ref<const std::string&>())) {
      throw CorpusError("line " + std::to_string(line_no) + ": missing or empty \"title\"");
    }
    auto id = id_it->get<std::string>();
    auto title = title_it->get<std::string>();
    if (title.find_first_of("\r\n") != std::string::npos) {
      throw CorpusError("line " + std::to_string(line_no) + ": title contains a line break");
    }
    if (!ids.insert(id).second) {
      throw CorpusError("line " + std::to_string(line_no) + ": duplicate id '" + id + "'");
    }
    documents.push_back(Document::make(std::move(id), std::move(title),
                                       optional_string(obj, "text", line_no),
                                       optional_string(obj, "label", line_no)));
  }
  if (documents.empty()) throw CorpusError("corpus file " + path.string() + " is empty");
  return Corpus::from_documents(std::move(documents));
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("cannot write " + path.string());
  for (const auto& doc : corpus.documents()) {
    nlohmann::ordered_json obj;
    obj["id"] = doc.id;
    obj["title"] = doc.title;
    if (doc.body) obj["text"] = *doc.body;
    if (doc.label) obj["label"] = *doc.label;
    out << obj.dump() << '\n';
  }
}

Document enforce_unit_length(const Document& doc, std::size_t max_words) {
  if (max_words == 0) throw std::invalid_argument("max_words must be at least 1");
  if (doc.tokens.size() <= max_words || !doc.body) return doc;

  const std::size_t title_tokens = tokenize(doc.title).size();
  const std::size_t keep = title_tokens >= max_words ? 0 : max_words - title_tokens;
  const auto spans = tokenize_spans(*doc.body);
  if (spans.size() <= keep) return doc;

  Document cut = doc;
  cut.body = keep == 0 ? std::string() : doc.body->substr(0, spans[keep - 1].end);
  cut.tokens = tokenize(cut.tokenized_text());
  cut.truncated = true;
  return cut;
}

}  // namespace topiccards
