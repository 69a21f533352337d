#pragma once

#include <span>
#include <string>
#include <vector>

#include "kbmrc/kb.hpp"
#include "kbmrc/text.hpp"

namespace kbmrc {

struct Prediction;

/// Fraction of positions where predicted == gold; an empty prediction is an
/// abstention and counts as wrong. Throws std::invalid_argument on a length
/// mismatch or empty input.
double precision_at_1(std::span<const std::string> predicted, std::span<const std::string> gold);
double precision_at_1(std::span<const Prediction> predictions,
                      const std::vector<Instance>& instances);

struct BleuDetail {
  std::vector<double> precisions;  // smoothed p_1 .. p_N
  double brevity_penalty = 0;
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;
  double score = 0;
};

/// Corpus BLEU with one reference per candidate. Clipped n-gram counts are
/// summed over the corpus before taking ratios; orders n >= 2 use add-one
/// smoothing, (matches + 1) / (total + 1). Throws std::invalid_argument on an
/// empty corpus or a length mismatch.
BleuDetail bleu_detail(const std::vector<TokenSequence>& candidates,
                       const std::vector<TokenSequence>& references, int max_n = 4);
double bleu(const std::vector<TokenSequence>& candidates,
            const std::vector<TokenSequence>& references, int max_n = 4);

}  // namespace kbmrc
