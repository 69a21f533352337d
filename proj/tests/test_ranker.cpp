#include <doctest.h>

#include <random>
#include <set>

#include "kbmrc/errors.hpp"
#include "kbmrc/fixtures.hpp"
#include "kbmrc/kvmemnet.hpp"
#include "kbmrc/metrics.hpp"
#include "kbmrc/pcnet.hpp"
#include "kbmrc/ranker.hpp"
#include "oracles.hpp"

using namespace kbmrc;

TEST_CASE("ranking loss by hand") {
  const std::vector<double> negs = {0.2, 0.5, -1.0};
  // 0.1 - 0.4 + 0.2 < 0, 0.1 - 0.4 + 0.5 = 0.2, the last is negative.
  CHECK(ranking_loss(0.4, negs, 0.1) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(ranking_loss(0.4, {}, 0.1) == 0.0);
  CHECK_THROWS_AS(ranking_loss(0.0, negs, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ranking_loss(0.0, negs, -1.0), std::invalid_argument);
}

TEST_CASE("ranking loss matches the oracle and vanishes when the margin holds") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-2, 2), gap(1e-3, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const double m = 0.1;
    const double pos = u(rng);
    std::vector<double> negs(1 + rng() % 8);
    for (auto& n : negs) n = u(rng);
    const double want = oracle::ranking_loss(pos, negs, m);
    CHECK(std::abs(ranking_loss(pos, negs, m) - want) <= 1e-12);
    CHECK(ranking_loss(pos, negs, m) >= 0);

    nn::Graph g;
    std::vector<nn::Var> nv;
    for (double n : negs) nv.push_back(g.constant(nn::Vector::Constant(1, n)));
    const auto lv = ranking_loss(g, g.constant(nn::Vector::Constant(1, pos)), nv, m);
    CHECK(std::abs(g.scalar(lv) - want) <= 1e-12);

    std::vector<double> satisfied(negs.size());
    for (auto& n : satisfied) n = pos - m - gap(rng);
    CHECK(ranking_loss(pos, satisfied, m) == 0.0);
  }
}

TEST_CASE("negative sampling") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 12);
    const int gold = static_cast<int>(rng() % static_cast<unsigned>(n));
    const int k = static_cast<int>(rng() % 8);
    const auto negs = sample_negatives(n, gold, k, rng);
    CHECK(negs.size() == static_cast<std::size_t>(std::min(k, n - 1)));
    const std::set<int> uniq(negs.begin(), negs.end());
    CHECK(uniq.size() == negs.size());
    for (int x : negs) {
      CHECK(x != gold);
      CHECK(x >= 0);
      CHECK(x < n);
    }
  }
  // Every incorrect index is drawn about equally often.
  std::vector<int> hits(6, 0);
  for (int i = 0; i < 30000; ++i) {
    for (int x : sample_negatives(6, 2, 1, rng)) ++hits[static_cast<std::size_t>(x)];
  }
  CHECK(hits[2] == 0);
  for (int i : {0, 1, 3, 4, 5}) CHECK(std::abs(hits[static_cast<std::size_t>(i)] - 6000) < 400);
}

TEST_CASE("rank order is a stable descending sort") {
  const std::vector<double> s = {0.5, 2.0, 0.5, -1.0, 2.0};
  CHECK(rank_order(s) == std::vector<int>{1, 4, 0, 2, 3});
  CHECK(rank_order(std::vector<double>{}).empty());
}

TEST_CASE("fusion arithmetic") {
  CHECK(fuse(2.0, 4.0, 0.25) == doctest::Approx(3.5));
  CHECK(fuse(2.0, 4.0, 1.0) == 2.0);
  CHECK(fuse(2.0, 4.0, 0.0) == 4.0);
  CHECK(min_max_normalize(std::vector<double>{1, 3, 2}) == std::vector<double>{0, 1, 0.5});
  CHECK(min_max_normalize(std::vector<double>{7, 7}) == std::vector<double>{0, 0});
  CHECK(min_max_normalize(std::vector<double>{}).empty());
  const auto grid = lambda_grid();
  REQUIRE(grid.size() == 11);
  CHECK(grid.front() == 0.0);
  CHECK(grid.back() == 1.0);
  CHECK(grid[3] == doctest::Approx(0.3));
}

TEST_CASE("train config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  auto bad = [&](auto mutate) {
    TrainConfig b;
    mutate(b);
    CHECK_THROWS_AS(b.validate(), UsageError);
  };
  bad([](TrainConfig& b) { b.margin = 0; });
  bad([](TrainConfig& b) { b.negatives = 0; });
  bad([](TrainConfig& b) { b.lambda = 1.5; });
  bad([](TrainConfig& b) { b.learning_rate = -1; });
  bad([](TrainConfig& b) { b.lr_decay = 0; });
  bad([](TrainConfig& b) { b.lr_decay = 1.1; });
  bad([](TrainConfig& b) { b.epochs = -1; });
  bad([](TrainConfig& b) { b.batch_size = 0; });
}

TEST_CASE("training is deterministic and predictions are execution independent") {
  const auto fx = separable_fixture(5, 40, 30);
  KvMemNetConfig kc;
  kc.embedding_dim = 8;
  kc.hidden_dim = 6;
  TrainConfig tc;
  tc.epochs = 2;
  tc.lr_decay = 0.9;
  KvMemNet a(build_qa_vocabulary(fx.train), kc, 9);
  KvMemNet b(build_qa_vocabulary(fx.train), kc, 9);
  const auto ra = train(a, fx.train, fx.dev, tc);
  const auto rb = train(b, fx.train, fx.dev, tc);
  CHECK(ra.epoch_loss == rb.epoch_loss);
  CHECK(ra.dev_p1 == rb.dev_p1);
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    CHECK(a.parameters()[i].value == b.parameters()[i].value);
  }

  const auto serial = predict_all(a, fx.dev, Execution::kSerial);
  const auto parallel = predict_all(a, fx.dev, Execution::kParallel);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].scores == parallel[i].scores);
    CHECK(serial[i].order == parallel[i].order);
  }
  CHECK(precision_at_1(serial, fx.dev) == doctest::Approx(ra.dev_p1.back()));

  CHECK_THROWS_AS(train(a, {}, fx.dev, tc), UsageError);
}

TEST_CASE("an instance without candidates abstains") {
  const auto inst = make_instance("x", "zzz qqq", {make_fact("a", "alpha", "owns", {"beta"})}, {0, 1});
  PcNet dummy(build_qa_vocabulary({inst}), PcNetConfig{}, 1);
  const auto p = predict(dummy, inst);
  CHECK(p.abstained());
  CHECK(p.top_text().empty());
}
