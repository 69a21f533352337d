#pragma once

// Inference-time fusion S = lambda f_qa + (1 - lambda) f_qg. The generation
// score is only computed for a shortlist of the best candidates by f_qa,
// which bounds the beam-search cost per question.

#include <span>
#include <vector>

#include "kbmrc/execution.hpp"
#include "kbmrc/paraphrase.hpp"
#include "kbmrc/qgen.hpp"
#include "kbmrc/ranker.hpp"

namespace kbmrc {

inline constexpr std::size_t kFusionShortlist = 10;

/// Per-question scores needed to rank under any lambda.
struct FusionScores {
  std::vector<Candidate> candidates;
  std::vector<double> f_qa;     // every candidate
  std::vector<int> shortlist;   // candidate indices in candidate order
  std::vector<double> f_qg;     // one per shortlist entry
};

/// Scores one question. Either model may be null: without a QA model every
/// argument candidate is shortlisted with f_qa = 0; without QG models f_qg = 0.
FusionScores fusion_scores(const QaModel* qa, const QgModel* qg, const ParaphraseModel* para,
                           const Instance& inst, std::size_t shortlist = kFusionShortlist);

std::vector<FusionScores> fusion_scores_all(const QaModel* qa, const QgModel* qg,
                                            const ParaphraseModel* para,
                                            const std::vector<Instance>& instances,
                                            std::size_t shortlist = kFusionShortlist,
                                            Execution exec = Execution::kParallel);

/// Ranking of the shortlist by S, optionally min-max normalizing f_qa and f_qg
/// over the shortlist first; the remaining candidates follow in f_qa order.
Prediction fused_prediction(const FusionScores& s, double lambda, bool normalize);

struct LambdaSelection {
  double lambda = 0;
  double p1 = 0;
  std::vector<double> grid;
  std::vector<double> grid_p1;
};

/// Evaluates every grid value and keeps the best; the smallest lambda wins ties.
LambdaSelection select_lambda(const std::vector<FusionScores>& scores,
                              const std::vector<Instance>& instances, bool normalize,
                              std::span<const double> grid);

}  // namespace kbmrc
