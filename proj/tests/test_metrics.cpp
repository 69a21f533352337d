#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "kbmrc/fixtures.hpp"
#include "kbmrc/metrics.hpp"
#include "kbmrc/ranker.hpp"
#include "oracles.hpp"

using namespace kbmrc;

TEST_CASE("precision at 1 arithmetic") {
  const std::vector<std::string> gold = {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"};
  auto pred = gold;
  CHECK(precision_at_1(pred, gold) == 1.0);
  pred[1] = "x";
  pred[4] = "";  // abstention
  pred[8] = "y";
  CHECK(precision_at_1(pred, gold) == doctest::Approx(0.7).epsilon(1e-15));
  const std::vector<std::string> empty_gold = {""};
  const std::vector<std::string> empty_pred = {""};
  CHECK(precision_at_1(empty_pred, empty_gold) == 0.0);
  CHECK_THROWS_AS(precision_at_1(std::vector<std::string>{"a"}, gold), std::invalid_argument);
  CHECK_THROWS_AS(precision_at_1(std::vector<std::string>{}, std::vector<std::string>{}),
                  std::invalid_argument);
}

TEST_CASE("precision at 1 over predictions") {
  const auto inst = figure4_instance();
  const auto cands = all_argument_candidates(inst);
  const int gold = gold_index(inst, cands);
  REQUIRE(gold >= 0);
  Prediction right{cands, std::vector<double>(cands.size(), 0.0), {}};
  right.order.push_back(gold);
  for (int i = 0; i < static_cast<int>(cands.size()); ++i) {
    if (i != gold) right.order.push_back(i);
  }
  Prediction wrong = right;
  std::rotate(wrong.order.begin(), wrong.order.begin() + 1, wrong.order.end());
  Prediction abstain;
  const std::vector<Prediction> preds = {right, wrong, abstain, right};
  const std::vector<Instance> insts(4, inst);
  CHECK(precision_at_1(preds, insts) == 0.5);
}

TEST_CASE("bleu hand oracle") {
  const oracle::BleuFixture fx;
  const auto d = bleu_detail(fx.candidates, fx.references);
  REQUIRE(d.precisions.size() == 4);
  CHECK(d.candidate_length == 11);
  CHECK(d.reference_length == 12);
  CHECK(d.precisions[0] == doctest::Approx(9.0 / 11.0).epsilon(1e-15));
  CHECK(d.precisions[1] == doctest::Approx(6.0 / 9.0).epsilon(1e-15));
  CHECK(d.precisions[2] == doctest::Approx(2.0 / 6.0).epsilon(1e-15));
  CHECK(d.precisions[3] == doctest::Approx(1.0 / 4.0).epsilon(1e-15));
  CHECK(d.brevity_penalty == doctest::Approx(std::exp(1.0 - 12.0 / 11.0)).epsilon(1e-15));
  CHECK(std::abs(d.score - fx.expected()) <= 1e-9);
}

TEST_CASE("bleu boundary cases") {
  const std::vector<TokenSequence> xs = {tokenize("where is st johns"), tokenize("a b c d e"),
                                         tokenize("one")};
  CHECK(bleu(xs, xs) == doctest::Approx(1.0).epsilon(1e-15));
  const std::vector<TokenSequence> other = {tokenize("q r s t"), tokenize("u v w x y"), tokenize("z")};
  CHECK(bleu(other, xs) == 0.0);
  CHECK_THROWS_AS(bleu({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(bleu(xs, std::vector<TokenSequence>{other[0]}), std::invalid_argument);
  const std::vector<TokenSequence> blank = {{}};
  CHECK(bleu(blank, std::vector<TokenSequence>{tokenize("a")}) == 0.0);
}

TEST_CASE("metrics are invariant under corpus permutation") {
  std::mt19937_64 rng(3);
  const std::vector<std::string> words = {"a", "b", "c", "d", "e"};
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 8;
    std::vector<TokenSequence> cand(n), ref(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0, len = 1 + rng() % 6; k < len; ++k) cand[i].push_back(words[rng() % 5]);
      for (std::size_t k = 0, len = 1 + rng() % 6; k < len; ++k) ref[i].push_back(words[rng() % 5]);
    }
    const double b = bleu(cand, ref);
    CHECK(b >= 0.0);
    CHECK(b <= 1.0);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<TokenSequence> pc, pr;
    std::vector<std::string> tops, golds, ptops, pgolds;
    for (std::size_t i = 0; i < n; ++i) {
      pc.push_back(cand[perm[i]]);
      pr.push_back(ref[perm[i]]);
      tops.push_back(cand[i][0]);
      golds.push_back(ref[i][0]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      ptops.push_back(tops[perm[i]]);
      pgolds.push_back(golds[perm[i]]);
    }
    CHECK(bleu(pc, pr) == doctest::Approx(b).epsilon(1e-12));
    CHECK(precision_at_1(ptops, pgolds) == precision_at_1(tops, golds));
  }
}
