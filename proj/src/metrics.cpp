#include "kbmrc/metrics.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "kbmrc/ranker.hpp"

namespace kbmrc {

double precision_at_1(std::span<const std::string> predicted, std::span<const std::string> gold) {
  if (predicted.size() != gold.size()) throw std::invalid_argument("P@1: length mismatch");
  if (gold.empty()) throw std::invalid_argument("P@1: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (!predicted[i].empty() && predicted[i] == gold[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

double precision_at_1(std::span<const Prediction> predictions,
                      const std::vector<Instance>& instances) {
  std::vector<std::string> predicted, gold;
  predicted.reserve(predictions.size());
  for (const auto& p : predictions) predicted.push_back(p.top_text());
  for (const auto& inst : instances) gold.push_back(inst.answer_text());
  return precision_at_1(predicted, gold);
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, int>;

NgramCounts ngrams(const TokenSequence& s, int n) {
  NgramCounts counts;
  const auto len = static_cast<int>(s.size());
  for (int i = 0; i + n <= len; ++i) ++counts[{s.begin() + i, s.begin() + i + n}];
  return counts;
}

}  // namespace

BleuDetail bleu_detail(const std::vector<TokenSequence>& candidates,
                       const std::vector<TokenSequence>& references, int max_n) {
  if (candidates.empty()) throw std::invalid_argument("BLEU: empty corpus");
  if (candidates.size() != references.size()) throw std::invalid_argument("BLEU: length mismatch");
  if (max_n < 1) throw std::invalid_argument("BLEU: max_n must be >= 1");

  std::vector<double> matched(static_cast<std::size_t>(max_n), 0.0);
  std::vector<double> total(static_cast<std::size_t>(max_n), 0.0);
  BleuDetail d;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    d.candidate_length += candidates[i].size();
    d.reference_length += references[i].size();
    for (int n = 1; n <= max_n; ++n) {
      const auto cand = ngrams(candidates[i], n);
      const auto ref = ngrams(references[i], n);
      for (const auto& [gram, count] : cand) {
        total[static_cast<std::size_t>(n - 1)] += count;
        if (auto it = ref.find(gram); it != ref.end()) {
          matched[static_cast<std::size_t>(n - 1)] += std::min(count, it->second);
        }
      }
    }
  }

  double log_sum = 0;
  bool zero = false;
  for (int n = 1; n <= max_n; ++n) {
    const auto k = static_cast<std::size_t>(n - 1);
    const double p = n == 1 ? (total[k] > 0 ? matched[k] / total[k] : 0.0)
                            : (matched[k] + 1.0) / (total[k] + 1.0);
    d.precisions.push_back(p);
    if (p <= 0) zero = true;
    else log_sum += std::log(p);
  }
  const auto c = static_cast<double>(d.candidate_length);
  const auto r = static_cast<double>(d.reference_length);
  d.brevity_penalty = c == 0 ? 0.0 : (c > r ? 1.0 : std::exp(1.0 - r / c));
  d.score = zero ? 0.0 : d.brevity_penalty * std::exp(log_sum / max_n);
  return d;
}

double bleu(const std::vector<TokenSequence>& candidates,
            const std::vector<TokenSequence>& references, int max_n) {
  return bleu_detail(candidates, references, max_n).score;
}

}  // namespace kbmrc
