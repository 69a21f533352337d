#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kbmrc/candidates.hpp"
#include "kbmrc/extkb.hpp"
#include "kbmrc/kb.hpp"
#include "kbmrc/nn/graph.hpp"
#include "kbmrc/nn/gru.hpp"
#include "kbmrc/vocab.hpp"

namespace kbmrc {

/// A candidate answer. Candidates with equal `text` denote the same entity.
struct Candidate {
  Occurrence occurrence;
  std::string text;
  /// Anchor path reaching the candidate, when one exists.
  std::optional<CandidatePath> path;
};

/// Every distinct argument text in document order, each with its shortest
/// anchor path (up to 2 hops) attached when the question anchors reach it.
std::vector<Candidate> all_argument_candidates(const Instance& inst);

/// Index of the first candidate whose text equals the gold answer text, or -1.
int gold_index(const Instance& inst, std::span<const Candidate> cands);

/// Vocabulary over question tokens and element tokens of `instances`, plus
/// element tokens of `external` when given.
Vocabulary build_qa_vocabulary(const std::vector<Instance>& instances,
                               const ExternalKB* external = nullptr);

/// A scorer f_qa(q, a) over a fixed candidate generator.
class QaModel {
 public:
  virtual ~QaModel() = default;

  virtual std::string kind() const = 0;
  virtual std::vector<Candidate> candidates(const Instance& inst) const = 0;
  /// One scalar node per candidate, all in graph `g`.
  virtual std::vector<nn::Var> score(nn::Graph& g, const Instance& inst,
                                     std::span<const Candidate> cands) const = 0;
  /// JSON describing architecture and vocabulary, stored in checkpoints.
  virtual std::string metadata() const = 0;

  nn::ParameterSet& parameters() { return params_; }
  const nn::ParameterSet& parameters() const { return params_; }
  const Vocabulary& vocabulary() const { return vocab_; }

  /// Enables external-KB enhancement of argument encodings. A null or empty
  /// index leaves every score bit-identical to the plain model.
  void attach_external_kb(std::shared_ptr<const FactIndex> index) { index_ = std::move(index); }
  const FactIndex* external_index() const { return index_.get(); }
  RetrievalConfig& retrieval_config() { return retrieval_; }

  /// Scores evaluated in a throwaway graph.
  std::vector<double> score_values(const Instance& inst, std::span<const Candidate> cands) const;

 protected:
  explicit QaModel(Vocabulary vocab) : vocab_(std::move(vocab)) {}

  Vocabulary vocab_;
  nn::ParameterSet params_;
  std::shared_ptr<const FactIndex> index_;
  RetrievalConfig retrieval_;
};

}  // namespace kbmrc
