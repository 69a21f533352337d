#include "kbmrc/text.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

namespace kbmrc {

namespace {

// Function words only; content words must survive for retrieval queries.
constexpr const char* kStopWords[] = {
    "a",     "about", "an",   "and",   "are",   "as",    "at",    "be",    "been",
    "but",   "by",    "can",  "could", "did",   "do",    "does",  "for",   "from",
    "had",   "has",   "have", "he",    "her",   "his",   "how",   "i",     "if",
    "in",    "into",  "is",   "it",    "its",   "of",    "on",    "or",    "she",
    "so",    "than",  "that", "the",   "their", "them",  "they",  "this",  "to",
    "was",   "we",    "were", "what",  "when",  "where", "which", "who",   "whom",
    "why",   "will",  "with", "would", "you",
};

std::vector<UChar32> code_points(std::string_view s) {
  std::vector<UChar32> out;
  out.reserve(s.size());
  int32_t i = 0;
  const auto n = static_cast<int32_t>(s.size());
  const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
  while (i < n) {
    UChar32 c;
    U8_NEXT(bytes, i, n, c);
    out.push_back(c < 0 ? 0xFFFD : c);
  }
  return out;
}

bool is_word_char(UChar32 c) {
  const auto cat = u_charType(c);
  return u_isalnum(c) || cat == U_NON_SPACING_MARK || cat == U_COMBINING_SPACING_MARK ||
         cat == U_ENCLOSING_MARK;
}

}  // namespace

std::string normalize_text(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  u.toLower(icu::Locale::getRoot());
  icu::UnicodeString normalized = nfc->normalize(u, status);
  if (U_FAILURE(status)) throw std::runtime_error("NFC normalization failed");
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

TokenSequence tokenize(std::string_view text) {
  const std::string norm = normalize_text(text);
  TokenSequence tokens;
  std::string current;
  int32_t i = 0;
  const auto n = static_cast<int32_t>(norm.size());
  const auto* bytes = reinterpret_cast<const uint8_t*>(norm.data());
  while (i < n) {
    const int32_t start = i;
    UChar32 c;
    U8_NEXT(bytes, i, n, c);
    if (c >= 0 && is_word_char(c)) {
      current.append(norm, static_cast<std::size_t>(start), static_cast<std::size_t>(i - start));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string join_tokens(const TokenSequence& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

std::size_t edit_distance(std::string_view x, std::string_view y) {
  const auto a = code_points(x);
  const auto b = code_points(y);
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

int fuzzy_indicator(std::string_view x, std::string_view y) {
  // One edit changes the UTF-8 length by at most 4 bytes.
  const auto lx = static_cast<long>(x.size());
  const auto ly = static_cast<long>(y.size());
  if (std::abs(lx - ly) > 4) return 0;
  return edit_distance(x, y) <= 1 ? 1 : 0;
}

StopWords::StopWords() {
  for (const char* w : kStopWords) words_.insert(w);
}

StopWords::StopWords(std::unordered_set<std::string> words) : words_(std::move(words)) {}

StopWords StopWords::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stop-word file: " + path.string());
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const auto toks = tokenize(line);
    if (toks.empty() || line.starts_with('#')) continue;
    for (const auto& t : toks) words.insert(t);
  }
  return StopWords(std::move(words));
}

bool StopWords::contains(std::string_view token) const {
  return words_.contains(std::string(token));
}

TokenSequence StopWords::remove_from(const TokenSequence& seq) const {
  TokenSequence out;
  std::copy_if(seq.begin(), seq.end(), std::back_inserter(out),
               [this](const std::string& t) { return !words_.contains(t); });
  return out;
}

const StopWords& default_stopwords() {
  static const StopWords words;
  return words;
}

}  // namespace kbmrc
