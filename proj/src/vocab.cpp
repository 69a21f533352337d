#include "kbmrc/vocab.hpp"

#include <stdexcept>

namespace kbmrc {

Vocabulary::Vocabulary(const std::vector<std::string>& extra_specials) {
  add(kPadToken);
  add(kUnkToken);
  for (const auto& s : extra_specials) add(s);
}

int Vocabulary::add(const std::string& token) {
  auto [it, inserted] = ids_.emplace(token, static_cast<int>(tokens_.size()));
  if (inserted) tokens_.push_back(token);
  return it->second;
}

int Vocabulary::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::encode(const TokenSequence& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

Vocabulary Vocabulary::build(const std::vector<TokenSequence>& corpus, int min_count,
                             const std::vector<std::string>& extra_specials) {
  std::unordered_map<std::string, int> counts;
  std::vector<std::string> order;
  for (const auto& seq : corpus) {
    for (const auto& t : seq) {
      if (counts[t]++ == 0) order.push_back(t);
    }
  }
  Vocabulary v(extra_specials);
  for (const auto& t : order) {
    if (counts[t] >= min_count) v.add(t);
  }
  return v;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  if (tokens.size() < 2 || tokens[kPad] != kPadToken || tokens[kUnk] != kUnkToken) {
    throw std::invalid_argument("vocabulary must start with <pad> and <unk>");
  }
  Vocabulary v;
  for (const auto& t : tokens) v.add(t);
  return v;
}

}  // namespace kbmrc
