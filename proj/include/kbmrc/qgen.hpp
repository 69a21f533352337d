#pragma once

// Question generation from an anchor-to-candidate path.
//
// Encoder: a word GRU runs over each path element; the element finals feed a
// fact GRU whose last state initializes the decoder.
// Decoder step t, from h_{t-1} and the previous word:
//   h_t    = GRU_dec(e(y_{t-1}), h_{t-1})
//   alpha  = softmax_j(h_{t-1} . f_j)            over fact states f_j
//   c_fct  = GRU_att(sum_j alpha_j f_j, h_t)
//   beta   = softmax_k(c_fct . w_k)              over every source word
//   c_wrd  = sum_k beta_k w_k
//   gen_y  = e_y . W_g [h_t; c_wrd]              for every target word y
//   copy_k = c_wrd . tanh(W_c w_k)               for every source position k
// Generation and copy logits share one softmax; a word reachable both ways
// gets the sum of its probabilities.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kbmrc/extkb.hpp"
#include "kbmrc/kb.hpp"
#include "kbmrc/metrics.hpp"
#include "kbmrc/nn/gru.hpp"
#include "kbmrc/qa_model.hpp"
#include "kbmrc/vocab.hpp"

namespace kbmrc {

class ParaphraseModel;

struct QgConfig {
  int embedding_dim = 32;
  int hidden_dim = 48;
  int beam_width = 3;
  int max_len = 16;
  int min_count = 1;
  bool copy = true;
  double init_scale = 0.1;
  double learning_rate = 0.005;
  int epochs = 30;
  int batch_size = 8;
  std::uint64_t seed = 1;
  bool verbose = false;
};

inline constexpr const char* kBos = "<s>";
inline constexpr const char* kEos = "</s>";

struct QgExample {
  std::vector<Element> source;  // path elements, anchor first
  TokenSequence target;
};

struct HierEncoding {
  std::vector<std::vector<nn::Var>> word_states;  // per element
  std::vector<nn::Var> fact_states;
  nn::Var final;
  /// Flattened source words and their states, element by element.
  std::vector<std::string> source_tokens;
  std::vector<nn::Var> source_states;
};

struct DecodeStep {
  nn::Var log_probs;  // joint over target vocabulary then source positions
  nn::Var hidden;
  nn::Var alpha;
  nn::Var beta;  // over all source positions
  nn::Var c_fct;
  nn::Var c_wrd;
  int focus = 0;  // element with the largest fact attention
};

struct Generation {
  TokenSequence tokens;  // without the end symbol
  double log_prob = 0;   // including the end symbol when emitted
  /// log_prob divided by the number of emitted symbols.
  double normalized() const;
  bool finished = false;
  int length = 0;  // emitted symbols, end symbol included
};

class QgModel {
 public:
  QgModel(Vocabulary source_vocab, Vocabulary target_vocab, const QgConfig& config,
          std::uint64_t seed);

  HierEncoding encode(nn::Graph& g, std::span<const Element> source) const;
  DecodeStep step(nn::Graph& g, const HierEncoding& enc, nn::Var previous_hidden,
                  const std::string& previous_word) const;
  /// log p(word) from a joint distribution: generation and copy entries
  /// holding `word` are merged; a word reachable neither way maps to <unk>.
  nn::Var word_log_prob(nn::Graph& g, const HierEncoding& enc, nn::Var joint,
                        const std::string& word) const;
  /// Per-word probabilities with generation and copy mass merged.
  std::vector<std::pair<std::string, double>> word_distribution(nn::Graph& g,
                                                                const HierEncoding& enc,
                                                                nn::Var joint) const;

  /// -sum_t log p(y_t | y_<t, x) with teacher forcing, end symbol included.
  nn::Var sequence_loss(nn::Graph& g, std::span<const Element> source,
                        const TokenSequence& target) const;
  double sequence_log_prob(std::span<const Element> source, const TokenSequence& target) const;

  Generation greedy(std::span<const Element> source, int max_len) const;
  /// Keeps the beam_width best prefixes by log-probability; returns the
  /// finished hypothesis with the best length-normalized log-probability.
  /// Throws std::invalid_argument unless beam_width >= 1 and max_len >= 1.
  Generation beam_search(std::span<const Element> source, int beam_width, int max_len) const;
  Generation generate(std::span<const Element> source) const {
    return beam_search(source, config_.beam_width, config_.max_len);
  }

  /// Enables external-KB enhancement: each argument's word states get
  /// W_e * delta added, delta being the sum of averaged neighbor encodings.
  void attach_external_kb(std::shared_ptr<const FactIndex> index) { index_ = std::move(index); }

  nn::ParameterSet& parameters() { return params_; }
  const nn::ParameterSet& parameters() const { return params_; }
  const Vocabulary& source_vocabulary() const { return src_vocab_; }
  const Vocabulary& target_vocabulary() const { return tgt_vocab_; }
  const QgConfig& config() const { return config_; }
  std::string metadata() const;

 private:
  std::vector<nn::Var> enhanced_word_states(nn::Graph& g, const Element& e,
                                            const nn::SequenceEncoding& words) const;

  Vocabulary src_vocab_;
  Vocabulary tgt_vocab_;
  QgConfig config_;
  nn::ParameterSet params_;
  nn::EmbeddingTable src_emb_, tgt_emb_;
  nn::GruParams word_gru_, fact_gru_, dec_gru_, att_gru_;
  nn::Parameter* w_g_ = nullptr;
  nn::Parameter* w_c_ = nullptr;
  nn::Parameter* w_e_ = nullptr;
  std::shared_ptr<const FactIndex> index_;
  RetrievalConfig retrieval_;
};

/// Generation input for one candidate: its anchor path when it has one,
/// otherwise (other argument, predicate, candidate) from its own fact.
std::vector<Element> qg_source(const Instance& inst, const Candidate& cand);

/// One example per instance whose gold answer is among `cands_of(inst)`.
std::vector<QgExample> qg_examples(const std::vector<Instance>& instances);

/// Source vocabulary over element tokens, target vocabulary over question
/// tokens (with <s> and </s>).
Vocabulary build_qg_source_vocabulary(const std::vector<QgExample>& examples);
Vocabulary build_qg_target_vocabulary(const std::vector<QgExample>& examples, int min_count);

struct QgReport {
  std::vector<double> epoch_loss;  // nats per target symbol
  double dev_bleu = 0;
  double seconds = 0;
};

/// Maximum likelihood training with teacher forcing and Adam. Throws
/// UsageError on an empty set, NumericError on divergence.
QgReport train_qg(QgModel& model, const std::vector<QgExample>& train_set,
                  const std::vector<QgExample>& dev_set);

double qg_bleu(const QgModel& model, const std::vector<QgExample>& examples);

/// f_qg: paraphrase probability between the question and the question
/// generated from `source`; 0 when the generation is empty.
double qg_score(const TokenSequence& question, std::span<const Element> source,
                const QgModel& qg, const ParaphraseModel& para, Generation* generated = nullptr);

}  // namespace kbmrc
