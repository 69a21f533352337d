#include "kbmrc/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "kbmrc/errors.hpp"

namespace kbmrc::nn {

namespace {

double eval_loss(const LossFn& loss_fn) {
  Graph g;
  const double v = g.scalar(loss_fn(g));
  if (!std::isfinite(v)) throw NumericError("grad_check: non-finite loss");
  return v;
}

}  // namespace

GradCheckResult grad_check(const LossFn& loss_fn, ParameterSet& params, double epsilon,
                           std::size_t samples_per_parameter, std::uint64_t seed) {
  params.zero_grad();
  {
    Graph g;
    const Var loss = loss_fn(g);
    if (!std::isfinite(g.scalar(loss))) throw NumericError("grad_check: non-finite loss");
    g.backward(loss);
  }
  std::vector<Matrix> analytic;
  for (std::size_t i = 0; i < params.size(); ++i) analytic.push_back(params[i].grad);
  params.zero_grad();

  std::mt19937_64 rng(seed);
  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = params[pi];
    std::vector<Eigen::Index> coords(static_cast<std::size_t>(p.value.size()));
    std::iota(coords.begin(), coords.end(), Eigen::Index{0});
    std::shuffle(coords.begin(), coords.end(), rng);
    if (coords.size() > samples_per_parameter) coords.resize(samples_per_parameter);

    for (const Eigen::Index c : coords) {
      double& x = p.value.data()[c];
      const double saved = x;
      x = saved + epsilon;
      const double plus = eval_loss(loss_fn);
      x = saved - epsilon;
      const double minus = eval_loss(loss_fn);
      x = saved;

      const double numeric = (plus - minus) / (2 * epsilon);
      const double a = analytic[pi].data()[c];
      const double denom = std::max({std::abs(a), std::abs(numeric), kGradCheckFloor});
      const double rel = std::abs(a - numeric) / denom;
      ++result.coordinates_checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_parameter = p.name();
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace kbmrc::nn
