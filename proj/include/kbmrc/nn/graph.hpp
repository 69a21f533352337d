#pragma once

// Dynamic computation graph with reverse-mode differentiation. Every node
// holds a column vector; weight matrices live in Parameters and only enter
// through lookup/matvec/bias. A Graph is built per example, evaluated eagerly
// while it is built, and discarded after backward().

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "kbmrc/nn/parameters.hpp"

namespace kbmrc::nn {

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Graph {
 public:
  Graph() { nodes_.reserve(256); }

  Var constant(Vector value);
  Var zeros(Eigen::Index dim) { return constant(Vector::Zero(dim)); }
  /// Column 0 of an n x 1 parameter.
  Var bias(Parameter& p);
  /// Row `row` of a |V| x d table, as a d-vector.
  Var lookup(Parameter& table, int row);
  Var matvec(Parameter& w, Var x);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var cmul(Var a, Var b);
  Var scale(Var a, double s);
  Var one_minus(Var a);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);

  /// Inner product as a 1-vector.
  Var dot(Var a, Var b);
  Var concat(std::span<const Var> parts);
  Var concat(std::initializer_list<Var> parts) { return concat(std::span<const Var>(parts)); }
  Var mean(std::span<const Var> items);
  Var sum(std::span<const Var> items);
  Var softmax(Var logits);
  Var log_softmax(Var logits);
  /// sum_i weights[i] * items[i]; weights has one entry per item.
  Var weighted_sum(Var weights, std::span<const Var> items);
  /// Entry i as a 1-vector.
  Var pick(Var a, int i);
  /// log(sum_{i in idx} exp(a[i])) as a 1-vector; idx must be non-empty.
  Var log_sum_exp_at(Var a, std::span<const int> idx);

  const Vector& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  double scalar(Var v) const { return value(v)(0); }
  Eigen::Index dim(Var v) const { return value(v).size(); }
  std::size_t size() const { return nodes_.size(); }

  /// Seeds d(loss)/d(loss) = 1 and accumulates into Parameter::grad.
  void backward(Var loss);

 private:
  enum class Op {
    kConstant, kBias, kLookup, kMatvec, kAdd, kSub, kCmul, kScale, kOneMinus, kSigmoid,
    kTanh, kRelu, kDot, kConcat, kMean, kSum, kSoftmax, kLogSoftmax, kWeightedSum, kPick,
    kLogSumExpAt,
  };

  struct Node {
    Op op = Op::kConstant;
    int a = -1;
    int b = -1;
    std::vector<int> args;
    Parameter* param = nullptr;
    int aux = 0;
    double k = 0;
    Vector value;
    Vector grad;
  };

  Var push(Node&& node);
  const Node& node(Var v) const { return nodes_[static_cast<std::size_t>(v.id)]; }
  void check_same_dim(Var a, Var b, const char* op) const;

  std::vector<Node> nodes_;
};

/// Numerically stable softmax (max-subtracted).
Vector softmax(const Vector& logits);
double log_sum_exp(const Vector& logits);

}  // namespace kbmrc::nn
