#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "kbmrc/nn/graph.hpp"

namespace kbmrc::nn {

/// Builds a fresh graph for the current parameter values and returns the
/// scalar loss node.
using LossFn = std::function<Var(Graph&)>;

struct GradCheckResult {
  double max_relative_error = 0;
  std::size_t coordinates_checked = 0;
  std::string worst_parameter;
  double worst_analytic = 0;
  double worst_numeric = 0;
};

/// Gradients smaller than this are compared in absolute terms.
inline constexpr double kGradCheckFloor = 1e-6;

/// Compares reverse-mode gradients against central differences on up to
/// `samples_per_parameter` coordinates of every parameter. The relative error
/// of a coordinate is |a - n| / max(|a|, |n|, kGradCheckFloor). Parameters are
/// restored afterwards. Throws NumericError if the loss is non-finite.
GradCheckResult grad_check(const LossFn& loss_fn, ParameterSet& params, double epsilon = 1e-4,
                           std::size_t samples_per_parameter = 12, std::uint64_t seed = 7);

}  // namespace kbmrc::nn
