#include "kbmrc/nn/graph.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace kbmrc::nn {

Vector softmax(const Vector& logits) {
  const double mx = logits.maxCoeff();
  Vector e = (logits.array() - mx).exp().matrix();
  return e / e.sum();
}

double log_sum_exp(const Vector& logits) {
  const double mx = logits.maxCoeff();
  return mx + std::log((logits.array() - mx).exp().sum());
}

Var Graph::push(Node&& node) {
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

void Graph::check_same_dim(Var a, Var b, const char* op) const {
  if (dim(a) != dim(b)) {
    throw std::invalid_argument(std::string(op) + ": dimension mismatch " +
                                std::to_string(dim(a)) + " vs " + std::to_string(dim(b)));
  }
}

Var Graph::constant(Vector value) {
  Node n;
  n.op = Op::kConstant;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Graph::bias(Parameter& p) {
  Node n;
  n.op = Op::kBias;
  n.param = &p;
  n.value = p.value.col(0);
  return push(std::move(n));
}

Var Graph::lookup(Parameter& table, int row) {
  if (row < 0 || row >= table.rows()) throw std::out_of_range("lookup row out of range");
  Node n;
  n.op = Op::kLookup;
  n.param = &table;
  n.aux = row;
  n.value = table.value.row(row).transpose();
  return push(std::move(n));
}

Var Graph::matvec(Parameter& w, Var x) {
  if (w.cols() != dim(x)) {
    throw std::invalid_argument("matvec " + w.name() + ": expected input dim " +
                                std::to_string(w.cols()) + ", got " + std::to_string(dim(x)));
  }
  Node n;
  n.op = Op::kMatvec;
  n.param = &w;
  n.a = x.id;
  n.value.noalias() = w.value * value(x);
  return push(std::move(n));
}

Var Graph::add(Var a, Var b) {
  check_same_dim(a, b, "add");
  Node n;
  n.op = Op::kAdd;
  n.a = a.id;
  n.b = b.id;
  n.value = value(a) + value(b);
  return push(std::move(n));
}

Var Graph::sub(Var a, Var b) {
  check_same_dim(a, b, "sub");
  Node n;
  n.op = Op::kSub;
  n.a = a.id;
  n.b = b.id;
  n.value = value(a) - value(b);
  return push(std::move(n));
}

Var Graph::cmul(Var a, Var b) {
  check_same_dim(a, b, "cmul");
  Node n;
  n.op = Op::kCmul;
  n.a = a.id;
  n.b = b.id;
  n.value = value(a).cwiseProduct(value(b));
  return push(std::move(n));
}

Var Graph::scale(Var a, double s) {
  Node n;
  n.op = Op::kScale;
  n.a = a.id;
  n.k = s;
  n.value = value(a) * s;
  return push(std::move(n));
}

Var Graph::one_minus(Var a) {
  Node n;
  n.op = Op::kOneMinus;
  n.a = a.id;
  n.value = (1.0 - value(a).array()).matrix();
  return push(std::move(n));
}

Var Graph::sigmoid(Var a) {
  Node n;
  n.op = Op::kSigmoid;
  n.a = a.id;
  n.value = (1.0 / (1.0 + (-value(a).array()).exp())).matrix();
  return push(std::move(n));
}

Var Graph::tanh(Var a) {
  Node n;
  n.op = Op::kTanh;
  n.a = a.id;
  n.value = value(a).array().tanh().matrix();
  return push(std::move(n));
}

Var Graph::relu(Var a) {
  Node n;
  n.op = Op::kRelu;
  n.a = a.id;
  n.value = value(a).cwiseMax(0.0);
  return push(std::move(n));
}

Var Graph::dot(Var a, Var b) {
  check_same_dim(a, b, "dot");
  Node n;
  n.op = Op::kDot;
  n.a = a.id;
  n.b = b.id;
  n.value = Vector::Constant(1, value(a).dot(value(b)));
  return push(std::move(n));
}

Var Graph::concat(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat of nothing");
  Eigen::Index total = 0;
  for (const Var p : parts) total += dim(p);
  Node n;
  n.op = Op::kConcat;
  n.value.resize(total);
  Eigen::Index off = 0;
  for (const Var p : parts) {
    n.value.segment(off, dim(p)) = value(p);
    off += dim(p);
    n.args.push_back(p.id);
  }
  return push(std::move(n));
}

Var Graph::mean(std::span<const Var> items) {
  if (items.empty()) throw std::invalid_argument("mean of nothing");
  Node n;
  n.op = Op::kMean;
  n.value = Vector::Zero(dim(items[0]));
  for (const Var v : items) {
    check_same_dim(items[0], v, "mean");
    n.value += value(v);
    n.args.push_back(v.id);
  }
  n.value /= static_cast<double>(items.size());
  return push(std::move(n));
}

Var Graph::sum(std::span<const Var> items) {
  if (items.empty()) throw std::invalid_argument("sum of nothing");
  Node n;
  n.op = Op::kSum;
  n.value = Vector::Zero(dim(items[0]));
  for (const Var v : items) {
    check_same_dim(items[0], v, "sum");
    n.value += value(v);
    n.args.push_back(v.id);
  }
  return push(std::move(n));
}

Var Graph::softmax(Var logits) {
  Node n;
  n.op = Op::kSoftmax;
  n.a = logits.id;
  n.value = nn::softmax(value(logits));
  return push(std::move(n));
}

Var Graph::log_softmax(Var logits) {
  Node n;
  n.op = Op::kLogSoftmax;
  n.a = logits.id;
  n.value = (value(logits).array() - log_sum_exp(value(logits))).matrix();
  return push(std::move(n));
}

Var Graph::weighted_sum(Var weights, std::span<const Var> items) {
  if (items.empty() || dim(weights) != static_cast<Eigen::Index>(items.size())) {
    throw std::invalid_argument("weighted_sum: need one weight per item");
  }
  const Vector& w = value(weights);
  Node n;
  n.op = Op::kWeightedSum;
  n.a = weights.id;
  n.value = Vector::Zero(dim(items[0]));
  for (std::size_t i = 0; i < items.size(); ++i) {
    check_same_dim(items[0], items[i], "weighted_sum");
    n.value += w(static_cast<Eigen::Index>(i)) * value(items[i]);
    n.args.push_back(items[i].id);
  }
  return push(std::move(n));
}

Var Graph::pick(Var a, int i) {
  if (i < 0 || i >= dim(a)) throw std::out_of_range("pick index out of range");
  Node n;
  n.op = Op::kPick;
  n.a = a.id;
  n.aux = i;
  n.value = Vector::Constant(1, value(a)(i));
  return push(std::move(n));
}

Var Graph::log_sum_exp_at(Var a, std::span<const int> idx) {
  if (idx.empty()) throw std::invalid_argument("log_sum_exp_at: empty index set");
  const Vector& x = value(a);
  Vector sel(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) sel(static_cast<Eigen::Index>(i)) = x(idx[i]);
  Node n;
  n.op = Op::kLogSumExpAt;
  n.a = a.id;
  n.args.assign(idx.begin(), idx.end());
  n.value = Vector::Constant(1, log_sum_exp(sel));
  return push(std::move(n));
}

void Graph::backward(Var loss) {
  if (dim(loss) != 1) throw std::invalid_argument("backward needs a scalar loss");
  for (auto& n : nodes_) n.grad.resize(0);
  auto grad_of = [this](int id) -> Vector& {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) n.grad = Vector::Zero(n.value.size());
    return n.grad;
  };
  grad_of(loss.id)(0) = 1.0;

  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) continue;
    const Vector& g = n.grad;
    switch (n.op) {
      case Op::kConstant:
        break;
      case Op::kBias:
        n.param->grad.col(0) += g;
        break;
      case Op::kLookup:
        n.param->grad.row(n.aux) += g.transpose();
        break;
      case Op::kMatvec: {
        const Vector& x = nodes_[static_cast<std::size_t>(n.a)].value;
        n.param->grad.noalias() += g * x.transpose();
        grad_of(n.a).noalias() += n.param->value.transpose() * g;
        break;
      }
      case Op::kAdd:
        grad_of(n.a) += g;
        grad_of(n.b) += g;
        break;
      case Op::kSub:
        grad_of(n.a) += g;
        grad_of(n.b) -= g;
        break;
      case Op::kCmul: {
        const Vector& va = nodes_[static_cast<std::size_t>(n.a)].value;
        const Vector& vb = nodes_[static_cast<std::size_t>(n.b)].value;
        grad_of(n.a) += g.cwiseProduct(vb);
        grad_of(n.b) += g.cwiseProduct(va);
        break;
      }
      case Op::kScale:
        grad_of(n.a) += n.k * g;
        break;
      case Op::kOneMinus:
        grad_of(n.a) -= g;
        break;
      case Op::kSigmoid:
        grad_of(n.a).array() += g.array() * n.value.array() * (1.0 - n.value.array());
        break;
      case Op::kTanh:
        grad_of(n.a).array() += g.array() * (1.0 - n.value.array().square());
        break;
      case Op::kRelu: {
        const Vector& x = nodes_[static_cast<std::size_t>(n.a)].value;
        grad_of(n.a).array() += g.array() * (x.array() > 0.0).cast<double>();
        break;
      }
      case Op::kDot: {
        const Vector& va = nodes_[static_cast<std::size_t>(n.a)].value;
        const Vector& vb = nodes_[static_cast<std::size_t>(n.b)].value;
        grad_of(n.a) += g(0) * vb;
        grad_of(n.b) += g(0) * va;
        break;
      }
      case Op::kConcat: {
        Eigen::Index off = 0;
        for (const int arg : n.args) {
          const Eigen::Index d = nodes_[static_cast<std::size_t>(arg)].value.size();
          grad_of(arg) += g.segment(off, d);
          off += d;
        }
        break;
      }
      case Op::kMean: {
        const double inv = 1.0 / static_cast<double>(n.args.size());
        for (const int arg : n.args) grad_of(arg) += inv * g;
        break;
      }
      case Op::kSum:
        for (const int arg : n.args) grad_of(arg) += g;
        break;
      case Op::kSoftmax: {
        const double gy = g.dot(n.value);
        grad_of(n.a).array() += n.value.array() * (g.array() - gy);
        break;
      }
      case Op::kLogSoftmax: {
        const Vector p = n.value.array().exp().matrix();
        grad_of(n.a) += g - p * g.sum();
        break;
      }
      case Op::kWeightedSum: {
        const Vector& w = nodes_[static_cast<std::size_t>(n.a)].value;
        Vector& gw = grad_of(n.a);
        for (std::size_t i = 0; i < n.args.size(); ++i) {
          const auto ii = static_cast<Eigen::Index>(i);
          gw(ii) += g.dot(nodes_[static_cast<std::size_t>(n.args[i])].value);
          grad_of(n.args[i]) += w(ii) * g;
        }
        break;
      }
      case Op::kPick:
        grad_of(n.a)(n.aux) += g(0);
        break;
      case Op::kLogSumExpAt: {
        const Vector& x = nodes_[static_cast<std::size_t>(n.a)].value;
        Vector& gx = grad_of(n.a);
        for (const int i : n.args) gx(i) += g(0) * std::exp(x(i) - n.value(0));
        break;
      }
    }
  }
}

}  // namespace kbmrc::nn
