#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace topiccards {

/// Lowercases `text` and splits it on every code point that is not a letter,
/// digit or combining mark. No stemming, no stop words. Invalid UTF-8 bytes act
/// as separators.
std::vector<std::string> tokenize(std::string_view text);

/// Unicode-aware lowercasing with the same case table the tokenizer uses.
std::string fold_case(std::string_view text);

/// Number of ASCII-whitespace separated runs in `text`.
std::size_t count_whitespace_tokens(std::string_view text);

struct Document {
  std::string id;
  std::string title;
  std::optional<std::string> body;
  std::optional<std::string> label;
  std::vector<std::string> tokens;
  // Set by enforce_unit_length when the body was cut.
  bool truncated = false;

  /// Builds a document and derives `tokens` from title and body.
  static Document make(std::string id, std::string title, std::optional<std::string> body = {},
                       std::optional<std::string> label = {});

  /// The exact string the tokens are derived from.
  std::string tokenized_text() const;
};

class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(const std::vector<Document>& documents);

  const std::vector<std::string>& words() const noexcept { return words_; }
  std::size_t size() const noexcept { return words_.size(); }
  bool contains(std::string_view word) const;
  /// Number of documents containing `word`; 0 when the word is unknown.
  std::size_t doc_frequency(std::string_view word) const;

 private:
  std::vector<std::string> words_;  // sorted
  std::vector<std::size_t> doc_frequency_;
};

/// Immutable document collection. Construct through load_corpus or from_documents.
class Corpus {
 public:
  static Corpus from_documents(std::vector<Document> documents);

  const std::vector<Document>& documents() const noexcept { return documents_; }
  std::size_t size() const noexcept { return documents_.size(); }
  const Vocabulary& vocabulary() const noexcept { return vocabulary_; }

  /// All ids whose title is exactly `title`; empty when the title is unknown.
  const std::vector<std::string>& ids_for_title(const std::string& title) const;
  bool has_title(const std::string& title) const { return !ids_for_title(title).empty(); }
  const std::unordered_map<std::string, std::vector<std::string>>& title_index() const noexcept {
    return title_index_;
  }

  const Document* find(const std::string& id) const;
  /// Position of the document in input order.
  std::size_t position_of(const std::string& id) const;

 private:
  std::vector<Document> documents_;
  Vocabulary vocabulary_;
  std::unordered_map<std::string, std::vector<std::string>> title_index_;
  std::unordered_map<std::string, std::size_t> position_;
};

enum class CorpusFormat { jsonl };

/// Reads one JSON object per line: {"id", "title", "text"?, "label"?}. Blank
/// lines are skipped; unknown keys are ignored.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format = CorpusFormat::jsonl);

/// Writes the documents back in the format load_corpus reads.
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Cuts the body so that title+body tokenizes to at most `max_words` tokens.
/// The title is never cut, so a title longer than `max_words` keeps all of
/// its tokens and loses the whole body.
Document enforce_unit_length(const Document& doc, std::size_t max_words);

}  // namespace topiccards
