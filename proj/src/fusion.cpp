#include "kbmrc/fusion.hpp"

#include <algorithm>
#include <exception>

#include "kbmrc/metrics.hpp"

namespace kbmrc {

FusionScores fusion_scores(const QaModel* qa, const QgModel* qg, const ParaphraseModel* para,
                           const Instance& inst, std::size_t shortlist) {
  FusionScores s;
  s.candidates = qa != nullptr ? qa->candidates(inst) : all_argument_candidates(inst);
  if (s.candidates.empty()) return s;
  s.f_qa = qa != nullptr ? qa->score_values(inst, s.candidates)
                         : std::vector<double>(s.candidates.size(), 0.0);
  auto top = rank_order(s.f_qa);
  top.resize(std::min(top.size(), shortlist));
  std::sort(top.begin(), top.end());
  s.shortlist = top;
  for (const int i : s.shortlist) {
    if (qg == nullptr || para == nullptr) {
      s.f_qg.push_back(0.0);
      continue;
    }
    const auto source = qg_source(inst, s.candidates[static_cast<std::size_t>(i)]);
    s.f_qg.push_back(qg_score(inst.question_tokens, source, *qg, *para));
  }
  return s;
}

std::vector<FusionScores> fusion_scores_all(const QaModel* qa, const QgModel* qg,
                                            const ParaphraseModel* para,
                                            const std::vector<Instance>& instances,
                                            std::size_t shortlist, Execution exec) {
  std::vector<FusionScores> out(instances.size());
  const auto n = static_cast<long>(instances.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic) if (exec == Execution::kParallel)
  for (long i = 0; i < n; ++i) {
    try {
      const auto k = static_cast<std::size_t>(i);
      out[k] = fusion_scores(qa, qg, para, instances[k], shortlist);
    } catch (...) {
#pragma omp critical(kbmrc_fusion_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

Prediction fused_prediction(const FusionScores& s, double lambda, bool normalize) {
  Prediction p;
  p.candidates = s.candidates;
  if (s.candidates.empty()) return p;
  std::vector<double> qa_short;
  for (const int i : s.shortlist) qa_short.push_back(s.f_qa[static_cast<std::size_t>(i)]);
  const auto qa = normalize ? min_max_normalize(qa_short) : qa_short;
  const auto qg = normalize ? min_max_normalize(s.f_qg) : s.f_qg;
  std::vector<double> fused;
  for (std::size_t k = 0; k < s.shortlist.size(); ++k) fused.push_back(fuse(qa[k], qg[k], lambda));

  for (const int k : rank_order(fused)) p.order.push_back(s.shortlist[static_cast<std::size_t>(k)]);
  for (const int i : rank_order(s.f_qa)) {
    if (!std::binary_search(s.shortlist.begin(), s.shortlist.end(), i)) p.order.push_back(i);
  }
  // Scores reported per candidate: fused for the shortlist, f_qa otherwise.
  p.scores = s.f_qa;
  for (std::size_t k = 0; k < s.shortlist.size(); ++k) {
    p.scores[static_cast<std::size_t>(s.shortlist[k])] = fused[k];
  }
  return p;
}

LambdaSelection select_lambda(const std::vector<FusionScores>& scores,
                              const std::vector<Instance>& instances, bool normalize,
                              std::span<const double> grid) {
  LambdaSelection sel;
  sel.grid.assign(grid.begin(), grid.end());
  sel.p1 = -1;
  for (const double lambda : grid) {
    std::vector<Prediction> preds;
    preds.reserve(scores.size());
    for (const auto& s : scores) preds.push_back(fused_prediction(s, lambda, normalize));
    const double p1 = precision_at_1(preds, instances);
    sel.grid_p1.push_back(p1);
    if (p1 > sel.p1) {
      sel.p1 = p1;
      sel.lambda = lambda;
    }
  }
  return sel;
}

}  // namespace kbmrc
