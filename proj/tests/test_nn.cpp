#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "kbmrc/errors.hpp"
#include "kbmrc/nn/checkpoint.hpp"
#include "kbmrc/nn/grad_check.hpp"
#include "kbmrc/nn/graph.hpp"
#include "kbmrc/nn/gru.hpp"
#include "kbmrc/nn/optimizer.hpp"

using namespace kbmrc;
using namespace kbmrc::nn;

namespace {

Vector random_vector(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

Vector sigmoid(const Vector& x) { return (1.0 + (-x.array()).exp()).inverse().matrix(); }

}  // namespace

TEST_CASE("softmax is a distribution and stable for large logits") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 30);
    const Vector x = random_vector(rng, n, 50.0);
    const Vector p = softmax(x);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
    CHECK((p.array() >= 0).all());
    Graph g;
    const auto v = g.softmax(g.constant(x));
    CHECK(std::abs(g.value(v).sum() - 1.0) <= 1e-12);
    const auto ls = g.log_softmax(g.constant(x));
    CHECK(std::abs(g.value(ls).array().exp().sum() - 1.0) <= 1e-12);
  }
  const Vector big = (Vector(3) << 1000.0, 1000.0, -1000.0).finished();
  const Vector p = softmax(big);
  CHECK(p(0) == doctest::Approx(0.5));
  CHECK(p(2) == 0.0);
  CHECK(log_sum_exp(big) == doctest::Approx(1000.0 + std::log(2.0)));
}

TEST_CASE("forward values of elementary ops") {
  Graph g;
  const auto a = g.constant((Vector(3) << 1, -2, 3).finished());
  const auto b = g.constant((Vector(3) << 0.5, 4, -1).finished());
  CHECK(g.scalar(g.dot(a, b)) == doctest::Approx(0.5 - 8 - 3));
  CHECK(g.value(g.cmul(a, b))(1) == doctest::Approx(-8));
  CHECK(g.value(g.sub(a, b))(2) == doctest::Approx(4));
  CHECK(g.value(g.relu(a))(1) == 0.0);
  CHECK(g.value(g.one_minus(a))(0) == 0.0);
  CHECK(g.dim(g.concat({a, b})) == 6);
  const std::vector<Var> items = {a, b};
  CHECK(g.value(g.mean(items))(0) == doctest::Approx(0.75));
  CHECK(g.value(g.sum(items))(1) == doctest::Approx(2));
  const auto w = g.constant((Vector(2) << 0.25, 0.75).finished());
  CHECK(g.value(g.weighted_sum(w, items))(2) == doctest::Approx(0.25 * 3 - 0.75));
  CHECK(g.scalar(g.pick(b, 1)) == 4.0);
  const std::vector<int> idx = {0, 2};
  CHECK(g.scalar(g.log_sum_exp_at(a, idx)) == doctest::Approx(std::log(std::exp(1.0) + std::exp(3.0))));
  CHECK_THROWS(g.add(a, g.constant(Vector::Zero(2))));
}

TEST_CASE("every op passes a gradient check") {
  ParameterSet ps;
  auto& emb = ps.add("emb", 5, 4);
  auto& w = ps.add("w", 4, 4);
  auto& bias = ps.add("b", 4, 1);
  std::mt19937_64 rng(3);
  ps.init_uniform(rng, -0.8, 0.8);
  auto loss = [&](Graph& g) {
    const auto x = g.lookup(emb, 2);
    const auto y = g.lookup(emb, 4);
    const auto h = g.tanh(g.add(g.matvec(w, x), g.bias(bias)));
    const auto s = g.sigmoid(g.cmul(h, y));
    const auto r = g.relu(g.sub(x, g.scale(y, 0.5)));
    const std::vector<Var> items = {h, s, r, g.one_minus(s)};
    const auto att = g.softmax(g.concat({g.dot(h, y), g.dot(s, x), g.dot(r, r), g.pick(h, 1)}));
    const auto mixed = g.weighted_sum(att, items);
    const auto ls = g.log_softmax(g.add(g.mean(items), mixed));
    const std::vector<int> idx = {1, 3};
    return g.add(g.add(g.pick(ls, 0), g.log_sum_exp_at(g.sum(items), idx)), g.dot(mixed, mixed));
  };
  const auto r = grad_check(loss, ps, 1e-5, 20, 5);
  CHECK(r.coordinates_checked > 0);
  CHECK(r.max_relative_error <= 1e-6);
}

TEST_CASE("gru step matches the closed form") {
  ParameterSet ps;
  const auto p = GruParams::create(ps, "g", 3, 4);
  std::mt19937_64 rng(9);
  ps.init_uniform(rng, -0.5, 0.5);
  const Vector x = random_vector(rng, 3);
  const Vector h = random_vector(rng, 4);
  Graph g;
  const Vector got = g.value(gru_step(g, p, g.constant(x), g.constant(h)));
  const Vector z = sigmoid(p.w_z->value * x + p.u_z->value * h + p.b_z->value.col(0));
  const Vector r = sigmoid(p.w_r->value * x + p.u_r->value * h + p.b_r->value.col(0));
  const Vector n = (p.w_n->value * x + p.u_n->value * r.cwiseProduct(h) + p.b_n->value.col(0))
                       .array().tanh().matrix();
  const Vector want = (Vector::Ones(4) - z).cwiseProduct(n) + z.cwiseProduct(h);
  CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("sequence encoders") {
  ParameterSet ps;
  auto emb = EmbeddingTable::create(ps, "emb", 6, 3);
  const auto fwd = GruParams::create(ps, "f", 3, 2);
  const auto bwd = GruParams::create(ps, "b", 3, 2);
  std::mt19937_64 rng(2);
  ps.init_uniform(rng, -0.5, 0.5);
  emb.zero_padding_row();
  const std::vector<int> ids = {2, 3, 5};
  Graph g;
  const auto enc = encode_sequence(g, fwd, emb, ids);
  CHECK(enc.states.size() == 3);
  const auto rev = encode_sequence(g, bwd, emb, ids, true);
  const auto bi = encode_bidirectional(g, fwd, bwd, emb, ids);
  CHECK(g.dim(bi) == 4);
  CHECK(g.value(bi).head(2) == g.value(enc.final()));
  CHECK(g.value(bi).tail(2) == g.value(rev.final()));
  CHECK_THROWS_AS(encode_sequence(g, fwd, emb, std::vector<int>{}), std::invalid_argument);

  auto loss = [&](Graph& gg) {
    const auto v = encode_bidirectional(gg, fwd, bwd, emb, ids);
    return gg.dot(v, v);
  };
  CHECK(grad_check(loss, ps, 1e-5, 8, 1).max_relative_error <= 1e-6);
}

TEST_CASE("embedding file loading") {
  ParameterSet ps;
  auto emb = EmbeddingTable::create(ps, "emb", 4, 2);
  Vocabulary vocab;
  vocab.add("cat");
  vocab.add("dog");
  const auto path = std::filesystem::temp_directory_path() / "kbmrc_emb.txt";
  {
    std::ofstream out(path);
    out << "cat 0.5 -1\nbird 1 1\n";
  }
  CHECK(load_embedding_file(path, vocab, emb) == 1);
  CHECK(emb.table->value(vocab.id("cat"), 0) == 0.5);
  CHECK(emb.table->value(vocab.id("cat"), 1) == -1.0);
  {
    std::ofstream out(path);
    out << "cat 0.5\n";
  }
  CHECK_THROWS_AS(load_embedding_file(path, vocab, emb), DataError);
  std::filesystem::remove(path);
}

TEST_CASE("adam step matches a hand computation") {
  ParameterSet ps;
  auto& p = ps.add("p", 2, 1);
  p.value << 1.0, -1.0;
  p.grad << 0.5, -2.0;
  Adam adam(AdamConfig{0.1, 0.9, 0.999, 1e-8, 0.0});
  adam.step(ps);
  // First step: m_hat = g, v_hat = g^2, so the update is lr * g / (|g| + eps).
  CHECK(p.value(0) == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
  CHECK(p.value(1) == doctest::Approx(-1.0 + 0.1 * 2.0 / (2.0 + 1e-8)).epsilon(1e-12));
  CHECK(adam.steps() == 1);

  // Clipping rescales the whole gradient to the clip norm before the update.
  ParameterSet q;
  auto& r = q.add("r", 2, 1);
  r.grad << 30.0, 40.0;
  Adam clipped(AdamConfig{0.1, 0.9, 0.999, 1e-8, 5.0});
  clipped.step(q);
  CHECK(r.value(0) == doctest::Approx(-0.1 * 3.0 / (3.0 + 1e-8)).epsilon(1e-12));
  CHECK(r.grad(0) == 30.0);
  clipped.set_learning_rate(0.05);
  CHECK(clipped.config().learning_rate == 0.05);

  std::vector<Matrix> ms = {Matrix::Ones(2, 2)};
  std::vector<Matrix> gs = {Matrix::Ones(2, 2)};
  std::vector<Matrix*> mp = {&ms[0]};
  std::vector<const Matrix*> gp = {&gs[0]};
  AdamState st;
  optimizer_step(mp, gp, st, {});
  std::vector<Matrix> other = {Matrix::Ones(3, 1)};
  std::vector<Matrix*> op = {&other[0]};
  std::vector<const Matrix*> og = {&other[0]};
  CHECK_THROWS_AS(optimizer_step(op, og, st, {}), std::invalid_argument);
}

TEST_CASE("checkpoint round trip") {
  ParameterSet ps;
  ps.add("a", 2, 3);
  ps.add("b", 4, 1);
  std::mt19937_64 rng(4);
  ps.init_uniform(rng, -1, 1);
  const auto path = std::filesystem::temp_directory_path() / "kbmrc_ckpt.bin";
  save_checkpoint(path, ps, R"({"model":"x"})");
  const auto ck = load_checkpoint(path);
  CHECK(ck.metadata == R"({"model":"x"})");
  REQUIRE(ck.tensors.size() == 2);

  ParameterSet fresh;
  fresh.add("a", 2, 3);
  fresh.add("b", 4, 1);
  restore_parameters(ck, fresh);
  CHECK(fresh[0].value == ps[0].value);
  CHECK(fresh[1].value == ps[1].value);

  ParameterSet wrong;
  wrong.add("a", 3, 2);
  wrong.add("b", 4, 1);
  CHECK_THROWS_AS(restore_parameters(ck, wrong), DataError);
  ParameterSet missing;
  missing.add("c", 2, 3);
  CHECK_THROWS_AS(restore_parameters(ck, missing), DataError);

  {
    std::ofstream out(path, std::ios::binary);
    out << "garbage!";
  }
  CHECK_THROWS_AS(load_checkpoint(path), DataError);
  std::filesystem::remove(path);
}

TEST_CASE("parameter set bookkeeping") {
  ParameterSet ps;
  ps.add("a", 2, 3);
  CHECK_THROWS_AS(ps.add("a", 1, 1), std::invalid_argument);
  CHECK(ps.num_scalars() == 6);
  CHECK(ps.find("a") != nullptr);
  CHECK(ps.find("z") == nullptr);
  ps[0].value(0, 0) = std::nan("");
  CHECK_FALSE(ps.all_finite());
}
