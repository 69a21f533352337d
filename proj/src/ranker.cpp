#include "kbmrc/ranker.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include "kbmrc/errors.hpp"
#include "kbmrc/metrics.hpp"
#include "kbmrc/nn/optimizer.hpp"

namespace kbmrc {

void TrainConfig::validate() const {
  if (!(margin > 0)) throw UsageError("margin must be > 0");
  if (negatives < 1) throw UsageError("negatives must be >= 1");
  if (!(lambda >= 0 && lambda <= 1)) throw UsageError("lambda must be in [0, 1]");
  if (!(learning_rate >= 0)) throw UsageError("learning rate must be >= 0");
  if (!(lr_decay > 0 && lr_decay <= 1)) throw UsageError("lr_decay must be in (0, 1]");
  if (epochs < 0) throw UsageError("epochs must be >= 0");
  if (batch_size < 1) throw UsageError("batch size must be >= 1");
}

double ranking_loss(double pos, std::span<const double> negs, double m) {
  if (!(m > 0)) throw std::invalid_argument("margin must be > 0");
  double total = 0;
  for (const double n : negs) total += std::max(0.0, m - pos + n);
  return total;
}

nn::Var ranking_loss(nn::Graph& g, nn::Var pos, std::span<const nn::Var> negs, double m) {
  if (!(m > 0)) throw std::invalid_argument("margin must be > 0");
  if (negs.empty()) return g.zeros(1);
  const nn::Var margin = g.constant(nn::Vector::Constant(1, m));
  std::vector<nn::Var> terms;
  terms.reserve(negs.size());
  for (const auto n : negs) terms.push_back(g.relu(g.add(margin, g.sub(n, pos))));
  return g.sum(terms);
}

std::vector<int> sample_negatives(int num_candidates, int gold, int k, std::mt19937_64& rng) {
  std::vector<int> pool;
  for (int i = 0; i < num_candidates; ++i) {
    if (i != gold) pool.push_back(i);
  }
  const auto take = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)), pool.size());
  // Partial Fisher-Yates with an explicit draw so the sequence does not
  // depend on the standard library's distribution implementation.
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  return pool;
}

TrainReport train(QaModel& model, const std::vector<Instance>& train_set,
                  const std::vector<Instance>& dev_set, const TrainConfig& config) {
  config.validate();
  if (train_set.empty()) throw UsageError("no training instances");
  const auto started = std::chrono::steady_clock::now();

  TrainReport report;
  report.model = model.kind();
  report.seed = config.seed;

  // Candidate generation is deterministic and parameter independent.
  std::vector<std::vector<Candidate>> cands(train_set.size());
  std::vector<int> golds(train_set.size());
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    cands[i] = model.candidates(train_set[i]);
    golds[i] = gold_index(train_set[i], cands[i]);
  }

  std::mt19937_64 rng(config.seed);
  nn::Adam adam({.learning_rate = config.learning_rate, .clip_norm = config.clip_norm});
  auto& params = model.parameters();
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    std::size_t trained = 0;
    std::size_t skipped = 0;
    int in_batch = 0;
    params.zero_grad();
    for (const std::size_t i : order) {
      const int gold = golds[i];
      const auto negs = gold < 0 ? std::vector<int>{}
                                 : sample_negatives(static_cast<int>(cands[i].size()), gold,
                                                    config.negatives, rng);
      if (negs.empty()) {
        ++skipped;
        continue;
      }
      std::vector<Candidate> subset{cands[i][static_cast<std::size_t>(gold)]};
      for (const int n : negs) subset.push_back(cands[i][static_cast<std::size_t>(n)]);

      nn::Graph g;
      const auto scores = model.score(g, train_set[i], subset);
      const nn::Var loss = ranking_loss(g, scores[0], std::span(scores).subspan(1), config.margin);
      const double value = g.scalar(loss);
      if (!std::isfinite(value)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch + 1) +
                           " on instance " + std::to_string(i));
      }
      loss_sum += value;
      ++trained;
      g.backward(loss);
      if (++in_batch == config.batch_size) {
        adam.step(params);
        params.zero_grad();
        in_batch = 0;
      }
    }
    if (in_batch > 0) adam.step(params);
    params.zero_grad();
    if (!params.all_finite()) {
      throw NumericError("parameters diverged at epoch " + std::to_string(epoch + 1));
    }
    adam.set_learning_rate(adam.config().learning_rate * config.lr_decay);

    report.skipped = skipped;
    report.epoch_loss.push_back(trained > 0 ? loss_sum / static_cast<double>(trained) : 0.0);
    if (!dev_set.empty()) {
      const auto preds = predict_all(model, dev_set);
      report.dev_p1.push_back(precision_at_1(preds, dev_set));
    }
    if (config.verbose) {
      std::clog << model.kind() << " epoch " << epoch + 1 << " loss " << report.epoch_loss.back();
      if (!report.dev_p1.empty()) std::clog << " dev P@1 " << report.dev_p1.back();
      std::clog << '\n';
    }
    if (!report.dev_p1.empty() && report.dev_p1.back() >= config.target_dev_p1) break;
  }
  if (report.skipped > 0 && config.verbose) {
    std::clog << "warning: skipped " << report.skipped
              << " instances without a gold candidate or an incorrect candidate\n";
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

std::string Prediction::top_text() const {
  return order.empty() ? std::string{} : candidates[static_cast<std::size_t>(order[0])].text;
}

std::vector<int> rank_order(std::span<const double> scores) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  return order;
}

Prediction predict(const QaModel& model, const Instance& inst) {
  Prediction p;
  p.candidates = model.candidates(inst);
  if (p.candidates.empty()) return p;
  p.scores = model.score_values(inst, p.candidates);
  p.order = rank_order(p.scores);
  return p;
}

double fuse(double f_qa, double f_qg, double lambda) {
  return lambda * f_qa + (1.0 - lambda) * f_qg;
}

std::vector<double> min_max_normalize(std::span<const double> xs) {
  std::vector<double> out(xs.size(), 0.0);
  if (xs.empty()) return out;
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  const double range = *hi - *lo;
  if (!(range > 0)) return out;
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = (xs[i] - *lo) / range;
  return out;
}

std::vector<double> lambda_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
  return grid;
}

}  // namespace kbmrc
