#pragma once

// Retrieval over an external triplet KB and the additive neighbor
// enhancement of element vectors:
//   v_e <- v_e + sum_{incoming} avg(v_pred, v_subj) + sum_{outgoing} avg(v_pred, v_obj)

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kbmrc/kb.hpp"
#include "kbmrc/nn/graph.hpp"

namespace kbmrc {

enum class Field { kSubject, kPredicate, kObject };
enum class QueryRole { kArgument, kPredicate };

const char* to_string(Field f);

struct RetrievalHit {
  int fact = 0;  // index into the external KB
  double score = 0;
  Field matched_field = Field::kSubject;
};

struct RetrievalConfig {
  std::size_t top_k = 10;
  /// Multiplier on the fields matching the query role (arguments for argument
  /// queries, the predicate for predicate queries).
  double role_boost = 2.0;
};

/// TF-IDF inverted index over subject / predicate / object fields.
class FactIndex {
 public:
  struct Posting {
    int fact;
    Field field;
    int tf;
  };

  /// Stop words are never indexed.
  static FactIndex build(std::shared_ptr<const ExternalKB> kb,
                         const StopWords& stop = default_stopwords());

  /// Scores facts by sum over query tokens of boost(field) * tf * idf, keeps
  /// positive scores, sorts by score descending then fact index, and truncates
  /// to top_k. The matched field is the one with the largest unboosted score.
  std::vector<RetrievalHit> retrieve(const Element& query, QueryRole role,
                                     const RetrievalConfig& config = {}) const;

  /// log(1 + N / df); 0 for unindexed tokens.
  double idf(const std::string& token) const;
  const std::vector<Posting>* postings(const std::string& token) const;
  std::size_t num_terms() const { return postings_.size(); }
  const ExternalKB& kb() const { return *kb_; }
  bool empty() const { return !kb_ || kb_->facts.empty(); }

 private:
  std::shared_ptr<const ExternalKB> kb_;
  StopWords stop_;
  std::map<std::string, std::vector<Posting>> postings_;
  std::map<std::string, int> doc_freq_;
};

/// An external fact adjacent to an element: `predicate` plus the argument on
/// the other side of the fact.
struct EnhancementLink {
  const Element* predicate = nullptr;
  const Element* argument = nullptr;
};

/// Retrieves with the argument role, keeps hits that share a non-stop-word
/// token with the element, and turns each into links: a hit matched on its
/// object contributes (predicate, subject); a hit matched on its subject
/// contributes (predicate, object) for every object. Predicate matches add
/// nothing.
std::vector<EnhancementLink> enhancement_links(const Element& element, const FactIndex& index,
                                               const RetrievalConfig& config = {});

/// Vectors for one link, already encoded.
struct EnhancementTerm {
  nn::Var predicate;
  nn::Var argument;
};

/// Returns `element` itself when `terms` is empty.
nn::Var enhance(nn::Graph& g, nn::Var element, std::span<const EnhancementTerm> terms);

/// The four external KB slots selectable from the command line.
inline constexpr const char* kExternalKbSlots[] = {"freebase-mini", "probase-mini", "nell-mini",
                                                   "reverb-mini"};
bool is_external_kb_slot(const std::string& name);

}  // namespace kbmrc
