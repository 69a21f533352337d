#pragma once

// Question paraphrase classifier: both questions go through one shared
// bidirectional GRU, the two encodings are multiplied elementwise and a 2-way
// softmax gives P(equivalent). Also the synthetic pair generator with the
// co-occurrence hard-negative rule.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "kbmrc/nn/gru.hpp"
#include "kbmrc/vocab.hpp"

namespace kbmrc {

struct ParaphrasePair {
  TokenSequence a;
  TokenSequence b;
  bool positive = false;
};

struct ParaphraseConfig {
  int embedding_dim = 32;
  int hidden_dim = 32;
  double init_scale = 0.1;
  double learning_rate = 0.01;
  int epochs = 10;
  int batch_size = 16;
  std::uint64_t seed = 1;
  bool verbose = false;
};

class ParaphraseModel {
 public:
  static constexpr int kPositive = 1;

  ParaphraseModel(Vocabulary vocab, const ParaphraseConfig& config, std::uint64_t seed);

  /// Shared biGRU encoding, 2h-dimensional.
  nn::Var encode(nn::Graph& g, const TokenSequence& q) const;
  /// log softmax over {negative, positive}. Throws std::invalid_argument when
  /// either side is empty.
  nn::Var log_probs(nn::Graph& g, const TokenSequence& a, const TokenSequence& b) const;
  /// P(positive); symmetric in its arguments bit for bit.
  double score(const TokenSequence& a, const TokenSequence& b) const;

  nn::ParameterSet& parameters() { return params_; }
  const nn::ParameterSet& parameters() const { return params_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  const ParaphraseConfig& config() const { return config_; }
  nn::Parameter& output_weight() { return *w_o_; }
  nn::Parameter& output_bias() { return *b_o_; }
  std::string metadata() const;

 private:
  Vocabulary vocab_;
  ParaphraseConfig config_;
  nn::ParameterSet params_;
  nn::EmbeddingTable emb_;
  nn::GruParams fwd_, bwd_;
  nn::Parameter* w_o_ = nullptr;
  nn::Parameter* b_o_ = nullptr;
};

Vocabulary build_paraphrase_vocabulary(const std::vector<ParaphrasePair>& pairs);

struct ParaphraseReport {
  std::vector<double> epoch_loss;  // mean cross-entropy per pair
  double heldout_accuracy = 0;
  double seconds = 0;
};

/// Fraction of pairs whose thresholded score (>= 0.5 means positive) matches
/// the label. Throws std::invalid_argument on an empty list.
double paraphrase_accuracy(const ParaphraseModel& model, const std::vector<ParaphrasePair>& pairs);

/// Cross-entropy training with Adam. Throws DataError unless both labels
/// occur in `train_pairs`, NumericError on divergence.
ParaphraseReport train_paraphrase(ParaphraseModel& model,
                                  const std::vector<ParaphrasePair>& train_pairs,
                                  const std::vector<ParaphrasePair>& heldout_pairs);

/// A template world: each relation has several phrasings containing "{e}",
/// which is replaced by an entity name.
struct ParaphraseWorld {
  std::vector<std::vector<std::string>> relations;
  std::vector<std::string> entities;

  static ParaphraseWorld standard(std::uint64_t seed);
};

/// Number of distinct words shared by the two questions.
int cooccurrence(const TokenSequence& a, const TokenSequence& b);

/// Index into `pool` of the question sharing the most words with
/// pool[query] among those that are not its paraphrase (by `meaning`, equal
/// ids are paraphrases); the earliest wins ties. -1 when none qualifies.
int hardest_negative(std::size_t query, const std::vector<TokenSequence>& pool,
                     const std::vector<int>& meaning);

/// ceil(n/2) positives (two phrasings, possibly the same one, of one relation
/// and entity) followed by floor(n/2) negatives; negative i keeps the first
/// question of positive i and replaces the second by that question's hardest
/// negative among the positive questions.
/// Throws std::invalid_argument when n_pairs < 2.
std::vector<ParaphrasePair> generate_corpus(const ParaphraseWorld& world, std::uint64_t seed,
                                            int n_pairs);
std::vector<ParaphrasePair> generate_synthetic_corpus(std::uint64_t seed, int n_pairs);

/// `label<TAB>question_a<TAB>question_b` with label 1 or 0.
void save_paraphrase_corpus(const std::filesystem::path& path,
                            const std::vector<ParaphrasePair>& pairs);
std::vector<ParaphrasePair> load_paraphrase_corpus(const std::filesystem::path& path);

}  // namespace kbmrc
