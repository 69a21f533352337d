#include "kbmrc/nn/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace kbmrc::nn {

void optimizer_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads,
                    AdamState& state, const AdamConfig& config) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("optimizer_step: parameter/gradient count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->rows() != grads[i]->rows() || params[i]->cols() != grads[i]->cols()) {
      throw std::invalid_argument("optimizer_step: gradient shape mismatch at " +
                                  std::to_string(i));
    }
  }
  if (state.m.empty()) {
    for (const Matrix* p : params) {
      state.m.push_back(Matrix::Zero(p->rows(), p->cols()));
      state.v.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  if (state.m.size() != params.size()) {
    throw std::invalid_argument("optimizer_step: state was built for a different parameter list");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].rows() != params[i]->rows() || state.m[i].cols() != params[i]->cols()) {
      throw std::invalid_argument("optimizer_step: state shape mismatch at " + std::to_string(i));
    }
  }

  double clip = 1.0;
  if (config.clip_norm > 0) {
    double sq = 0;
    for (const Matrix* g : grads) sq += g->squaredNorm();
    const double norm = std::sqrt(sq);
    if (norm > config.clip_norm) clip = config.clip_norm / norm;
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& m = state.m[i];
    Matrix& v = state.v[i];
    const Matrix g = clip * *grads[i];
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseAbs2();
    params[i]->array() -= config.learning_rate * (m.array() / c1) /
                          ((v.array() / c2).sqrt() + config.epsilon);
  }
}

void Adam::step(ParameterSet& params) {
  std::vector<Matrix*> values;
  std::vector<const Matrix*> grads;
  for (std::size_t i = 0; i < params.size(); ++i) {
    values.push_back(&params[i].value);
    grads.push_back(&params[i].grad);
  }
  optimizer_step(values, grads, state_, config_);
}

}  // namespace kbmrc::nn
