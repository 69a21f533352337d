#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "kbmrc/text.hpp"

namespace kbmrc {

/// Token <-> row mapping. Row 0 is padding, row 1 the unknown token; any
/// extra specials follow in the order given to the constructor.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kUnkToken = "<unk>";

  explicit Vocabulary(const std::vector<std::string>& extra_specials = {});

  /// Returns the existing id when present.
  int add(const std::string& token);
  int id(const std::string& token) const;
  bool contains(const std::string& token) const { return ids_.contains(token); }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(tokens_.size()); }
  std::vector<int> encode(const TokenSequence& tokens) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Counts tokens and keeps those seen at least `min_count` times, ordered by
  /// first appearance.
  static Vocabulary build(const std::vector<TokenSequence>& corpus, int min_count = 1,
                          const std::vector<std::string>& extra_specials = {});
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

}  // namespace kbmrc
