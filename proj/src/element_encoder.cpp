#include "kbmrc/element_encoder.hpp"

namespace kbmrc {

nn::Var ElementEncoder::encode(const TokenSequence& tokens) {
  std::vector<int> ids = vocab_.encode(tokens);
  auto it = plain_.find(ids);
  if (it != plain_.end()) return it->second;
  const nn::Var v = nn::encode_sequence(g_, gru_, emb_, ids).final();
  plain_.emplace(std::move(ids), v);
  return v;
}

nn::Var ElementEncoder::encode(const Element& e) { return encode(e.tokens); }

nn::Var ElementEncoder::encode_enhanced(const Element& e) {
  if (index_ == nullptr || index_->empty() || e.role == Role::kPredicate) return encode(e);
  const std::string key = e.text();
  auto it = enhanced_.find(key);
  if (it != enhanced_.end()) return it->second;

  const RetrievalConfig defaults;
  std::vector<EnhancementTerm> terms;
  for (const auto& link : enhancement_links(e, *index_, retrieval_ ? *retrieval_ : defaults)) {
    terms.push_back({encode(*link.predicate), encode(*link.argument)});
  }
  const nn::Var v = enhance(g_, encode(e), terms);
  enhanced_.emplace(key, v);
  return v;
}

}  // namespace kbmrc
