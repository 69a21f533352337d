#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace kbmrc {

/// Lowercased word tokens. Only `tokenize` produces these, so no token is empty.
using TokenSequence = std::vector<std::string>;

/// Lowercase + Unicode NFC.
std::string normalize_text(std::string_view text);

/// Splits on whitespace and punctuation boundaries (hyphens included) and
/// drops the punctuation itself. Letters, digits and combining marks are word
/// characters; everything else separates tokens.
TokenSequence tokenize(std::string_view text);

std::string join_tokens(const TokenSequence& tokens);

/// Character-level Levenshtein distance with unit costs. Characters are
/// Unicode code points, not bytes.
std::size_t edit_distance(std::string_view x, std::string_view y);

/// 1 iff edit_distance(x, y) <= 1.
int fuzzy_indicator(std::string_view x, std::string_view y);

class StopWords {
 public:
  /// The built-in English function-word list.
  StopWords();
  explicit StopWords(std::unordered_set<std::string> words);

  /// One word per line; blank lines and lines starting with '#' are skipped.
  static StopWords from_file(const std::filesystem::path& path);

  bool contains(std::string_view token) const;
  std::size_t size() const { return words_.size(); }

  TokenSequence remove_from(const TokenSequence& seq) const;

 private:
  std::unordered_set<std::string> words_;
};

const StopWords& default_stopwords();

inline TokenSequence remove_stopwords(const TokenSequence& seq) {
  return default_stopwords().remove_from(seq);
}

}  // namespace kbmrc
