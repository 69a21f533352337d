#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace kbmrc::nn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class Parameter {
 public:
  Parameter(std::string name, Eigen::Index rows, Eigen::Index cols)
      : name_(std::move(name)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}

  const std::string& name() const { return name_; }
  Eigen::Index rows() const { return value.rows(); }
  Eigen::Index cols() const { return value.cols(); }

 private:
  std::string name_;

 public:
  Matrix value;
  Matrix grad;
};

/// Owns every trainable matrix of a model. Addresses are stable for the
/// lifetime of the set, so models keep raw Parameter pointers into it.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;
  ParameterSet(ParameterSet&&) = default;
  ParameterSet& operator=(ParameterSet&&) = default;

  /// Throws std::invalid_argument if the name is taken.
  Parameter& add(const std::string& name, Eigen::Index rows, Eigen::Index cols);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

  std::size_t num_scalars() const;
  void zero_grad();
  /// Uniform(lo, hi) for every entry, in insertion order.
  void init_uniform(std::mt19937_64& rng, double lo, double hi);
  bool all_finite() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

}  // namespace kbmrc::nn
