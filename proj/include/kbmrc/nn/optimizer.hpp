#pragma once

#include <span>
#include <vector>

#include "kbmrc/nn/parameters.hpp"

namespace kbmrc::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Global gradient-norm clip; 0 disables it.
  double clip_norm = 0.0;
};

/// Moment estimates for a fixed list of matrices.
struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long step = 0;
};

/// One bias-corrected Adam update of `params` from `grads`. The state is sized
/// on first use; later calls must present the same shapes or
/// std::invalid_argument is thrown.
void optimizer_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads,
                    AdamState& state, const AdamConfig& config);

class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// Applies Parameter::grad to every parameter; does not clear gradients.
  void step(ParameterSet& params);
  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  long steps() const { return state_.step; }

 private:
  AdamConfig config_;
  AdamState state_;
};

}  // namespace kbmrc::nn
