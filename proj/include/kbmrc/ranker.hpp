#pragma once

// Margin ranking loss, negative sampling, the training loop shared by the
// QA scorers, argmax prediction and score fusion.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "kbmrc/execution.hpp"
#include "kbmrc/qa_model.hpp"

namespace kbmrc {

struct TrainConfig {
  double margin = 0.1;
  int negatives = 5;
  /// Fusion weight on f_qa; only used at inference.
  double lambda = 0.5;
  double learning_rate = 2e-3;
  /// Multiplies the learning rate after every epoch.
  double lr_decay = 1.0;
  int epochs = 30;
  int batch_size = 16;
  std::uint64_t seed = 1;
  double clip_norm = 5.0;
  /// Min-max normalize each model's scores per question before fusing.
  bool normalize_fusion = true;
  /// Stop once dev P@1 reaches this value (1.1 never stops early).
  double target_dev_p1 = 1.1;
  bool verbose = false;

  /// Throws UsageError when an invariant is violated.
  void validate() const;
};

/// sum over negatives of max(0, m - pos + neg). Throws std::invalid_argument
/// unless m > 0.
double ranking_loss(double pos, std::span<const double> negs, double m);
nn::Var ranking_loss(nn::Graph& g, nn::Var pos, std::span<const nn::Var> negs, double m);

/// Up to k distinct candidate indices, never `gold`, drawn uniformly without
/// replacement; every incorrect index when fewer than k exist.
std::vector<int> sample_negatives(int num_candidates, int gold, int k, std::mt19937_64& rng);

struct TrainReport {
  std::string model;
  std::uint64_t seed = 0;
  std::vector<double> epoch_loss;  // mean hinge loss per trained instance
  std::vector<double> dev_p1;      // empty without dev data
  std::size_t skipped = 0;         // instances without gold or negatives, per epoch
  double seconds = 0;
};

/// Mini-batch Adam on the margin loss. Instances whose gold answer is not a
/// candidate, or that have no incorrect candidate, are skipped. Throws
/// NumericError when the loss or a parameter becomes non-finite.
TrainReport train(QaModel& model, const std::vector<Instance>& train_set,
                  const std::vector<Instance>& dev_set, const TrainConfig& config);

struct Prediction {
  std::vector<Candidate> candidates;
  std::vector<double> scores;
  /// Candidate indices by descending score; equal scores keep candidate order.
  std::vector<int> order;

  bool abstained() const { return order.empty(); }
  /// Text of the top-ranked candidate; empty when abstaining.
  std::string top_text() const;
};

/// Stable descending order of `scores`.
std::vector<int> rank_order(std::span<const double> scores);

Prediction predict(const QaModel& model, const Instance& inst);

/// One prediction per instance. The parallel path fans out over instances and
/// returns results identical to the serial one.
std::vector<Prediction> predict_all(const QaModel& model, const std::vector<Instance>& instances,
                                    Execution exec = Execution::kParallel);

/// S = lambda f_qa + (1 - lambda) f_qg.
double fuse(double f_qa, double f_qg, double lambda);

/// (x - min) / (max - min) per entry; all zeros when the range is empty.
std::vector<double> min_max_normalize(std::span<const double> xs);

/// {0, 0.1, ..., 1}.
std::vector<double> lambda_grid();

}  // namespace kbmrc
