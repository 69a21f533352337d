#pragma once

#include <map>
#include <string>
#include <vector>

#include "kbmrc/extkb.hpp"
#include "kbmrc/kb.hpp"
#include "kbmrc/nn/gru.hpp"
#include "kbmrc/vocab.hpp"

namespace kbmrc {

/// Encodes KB elements (arguments and predicates) as the final GRU state over
/// their tokens, memoized per graph so an element shared by several paths or
/// memory slots is one node. Optionally adds external-KB neighbors to
/// arguments.
class ElementEncoder {
 public:
  ElementEncoder(nn::Graph& g, const nn::GruParams& gru, const nn::EmbeddingTable& emb,
                 const Vocabulary& vocab, const FactIndex* index = nullptr,
                 const RetrievalConfig* retrieval = nullptr)
      : g_(g), gru_(gru), emb_(emb), vocab_(vocab), index_(index), retrieval_(retrieval) {}

  nn::Var encode(const Element& e);
  nn::Var encode(const TokenSequence& tokens);

  /// Arguments get the enhancement sum when an index is attached; predicates
  /// and the no-index case return encode(e).
  nn::Var encode_enhanced(const Element& e);

  nn::Graph& graph() { return g_; }

 private:
  nn::Graph& g_;
  const nn::GruParams& gru_;
  const nn::EmbeddingTable& emb_;
  const Vocabulary& vocab_;
  const FactIndex* index_;
  const RetrievalConfig* retrieval_;
  std::map<std::vector<int>, nn::Var> plain_;
  std::map<std::string, nn::Var> enhanced_;
};

}  // namespace kbmrc
