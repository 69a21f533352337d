#include <doctest.h>

#include <memory>
#include <sstream>

#include <json.hpp>

#include "kbmrc/fixtures.hpp"
#include "kbmrc/kvmemnet.hpp"
#include "kbmrc/nn/grad_check.hpp"
#include "kbmrc/ranker.hpp"

using namespace kbmrc;

namespace {

KvMemNetConfig small_config(int hops) {
  KvMemNetConfig c;
  c.embedding_dim = 6;
  c.hidden_dim = 4;
  c.hops = hops;
  return c;
}

}  // namespace

TEST_CASE("memory has a forward and a backward slot per object") {
  const auto inst = make_instance(
      "m", "q", {make_fact("a", "x", "p", {"y", "z"}), make_fact("b", "y", "r", {"w"})}, {0, 1});
  const auto slots = build_memory(inst.kb);
  REQUIRE(slots.size() == 6);
  CHECK(slots[0].key_argument->text() == "x");
  CHECK(slots[0].value->text() == "y");
  CHECK(slots[0].direction == SlotDirection::kForward);
  CHECK(slots[1].key_argument->text() == "y");
  CHECK(slots[1].value->text() == "x");
  CHECK(slots[1].direction == SlotDirection::kBackward);
  CHECK(slots[2].value->text() == "z");
  CHECK(slots[2].object == 1);
  CHECK(slots[5].fact == 1);
  for (const auto& s : slots) CHECK(s.key_predicate->role == Role::kPredicate);
}

TEST_CASE("kvmemnet inference matches a dense re-computation") {
  const auto fx = chain_fixture(2, 4, 2);
  const auto& inst = fx.dev[0];
  for (int hops = 1; hops <= 3; ++hops) {
    auto cfg = small_config(hops);
    cfg.identity_hop_init = false;
    cfg.identity_value_init = false;
    KvMemNet model(build_qa_vocabulary(fx.train), cfg, 11);
    const auto cands = model.candidates(inst);
    nn::Graph g;
    AttentionTrace trace;
    const auto vars = model.score_traced(g, inst, cands, &trace);

    nn::Graph og;
    auto enc = model.element_encoder(og);
    auto e = [&](const Element& el) { return og.value(enc.encode(el)); };
    const nn::Matrix& P = model.value_projection().value;
    const nn::Matrix& R = model.hop_matrix().value;
    const auto slots = build_memory(inst.kb);
    nn::Matrix keys(8, static_cast<Eigen::Index>(slots.size()));
    nn::Matrix values(8, static_cast<Eigen::Index>(slots.size()));
    for (std::size_t i = 0; i < slots.size(); ++i) {
      keys.col(static_cast<Eigen::Index>(i)) << e(*slots[i].key_argument), e(*slots[i].key_predicate);
      values.col(static_cast<Eigen::Index>(i)) = P * e(*slots[i].value);
    }
    nn::Vector q = og.value(model.question_vector(og, inst.question_tokens));
    REQUIRE(static_cast<int>(trace.alphas.size()) == hops);
    for (int h = 0; h < hops; ++h) {
      const nn::Vector logits = keys.transpose() * q;
      const nn::Vector alpha = (logits.array() - logits.maxCoeff()).exp().matrix();
      const nn::Vector a = alpha / alpha.sum();
      for (Eigen::Index i = 0; i < a.size(); ++i) {
        CHECK(trace.alphas[static_cast<std::size_t>(h)][static_cast<std::size_t>(i)] ==
              doctest::Approx(a(i)).epsilon(1e-12));
      }
      q = R * (q + values * a);
    }
    for (std::size_t c = 0; c < cands.size(); ++c) {
      const double want = q.dot(P * e(inst.kb.argument(cands[c].occurrence)));
      CHECK(g.scalar(vars[c]) == doctest::Approx(want).epsilon(1e-10));
    }
  }
}

TEST_CASE("identity initialization") {
  const auto fx = chain_fixture(2, 4, 2);
  KvMemNet model(build_qa_vocabulary(fx.train), small_config(2), 1);
  CHECK(model.hop_matrix().value.isIdentity());
  const auto& P = model.value_projection().value;
  CHECK(P.rows() == 8);
  CHECK(P.cols() == 4);
  CHECK(P.topRows(4).isIdentity());
  CHECK(P.bottomRows(4).isZero());
  CHECK(model.embedding().table->value.row(Vocabulary::kPad).isZero());
  CHECK_THROWS_AS(KvMemNet(build_qa_vocabulary(fx.train), small_config(0), 1), std::invalid_argument);
  CHECK_THROWS_AS(KvMemNet(build_qa_vocabulary(fx.train), small_config(4), 1), std::invalid_argument);
}

TEST_CASE("addressing is a distribution") {
  const auto fx = chain_fixture(3, 30, 1);
  KvMemNet model(build_qa_vocabulary(fx.train), small_config(3), 5);
  for (const auto& inst : fx.train) {
    nn::Graph g;
    AttentionTrace trace;
    model.score_traced(g, inst, model.candidates(inst), &trace);
    for (const auto& alpha : trace.alphas) {
      double sum = 0;
      for (double a : alpha) {
        CHECK(a >= 0);
        sum += a;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
  nn::Graph g;
  CHECK_THROWS_AS(model.address(g, g.zeros(8), {}), std::invalid_argument);
  const std::vector<nn::Var> one = {g.zeros(8)};
  CHECK_THROWS_AS(model.read(g, g.constant(nn::Vector::Ones(2)), one), std::invalid_argument);
}

TEST_CASE("kvmemnet gradients for one, two and three hops") {
  const auto fx = chain_fixture(6, 3, 1);
  const auto& inst = fx.train[0];
  for (int hops = 1; hops <= 3; ++hops) {
    auto cfg = small_config(hops);
    cfg.identity_hop_init = false;
    KvMemNet model(build_qa_vocabulary(fx.train), cfg, 3);
    const auto cands = model.candidates(inst);
    const int gold = gold_index(inst, cands);
    REQUIRE(gold >= 0);
    auto loss = [&](nn::Graph& g) {
      const auto s = model.score(g, inst, cands);
      std::vector<nn::Var> negs;
      for (int i = 0; i < static_cast<int>(s.size()); ++i) {
        if (i != gold) negs.push_back(s[static_cast<std::size_t>(i)]);
      }
      return ranking_loss(g, s[static_cast<std::size_t>(gold)], negs, 1.0);
    };
    const auto r = nn::grad_check(loss, model.parameters(), 1e-4, 6, 4);
    CHECK(r.max_relative_error <= 1e-4);
  }
}

TEST_CASE("attention trace records") {
  const auto inst = figure4_instance();
  KvMemNet model(build_qa_vocabulary({inst}), small_config(2), 1);
  nn::Graph g;
  AttentionTrace trace;
  model.score_traced(g, inst, model.candidates(inst), &trace);
  std::ostringstream out;
  const auto slots = build_memory(inst.kb);
  write_attention_trace(out, "figure4", slots, trace);
  std::istringstream in(out.str());
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("instance") == "figure4");
    CHECK(j.at("hop").get<int>() == 1 + n / static_cast<int>(slots.size()));
    ++n;
  }
  CHECK(n == 2 * static_cast<int>(slots.size()));
}

TEST_CASE("empty external index leaves kvmemnet scores unchanged") {
  const auto fx = external_kb_fixture(3, 5, 3);
  KvMemNet model(build_qa_vocabulary(fx.data.train, &fx.kb), small_config(1), 4);
  const auto& inst = fx.data.dev[0];
  const auto cands = model.candidates(inst);
  const auto plain = model.score_values(inst, cands);
  model.attach_external_kb(nullptr);
  CHECK(model.score_values(inst, cands) == plain);
  model.attach_external_kb(std::make_shared<FactIndex>(
      FactIndex::build(std::make_shared<ExternalKB>(ExternalKB{"empty", {}}))));
  CHECK(model.score_values(inst, cands) == plain);
}

TEST_CASE("kvmemnet candidates are every distinct argument") {
  const auto inst = figure4_instance();
  KvMemNet model(build_qa_vocabulary({inst}), small_config(1), 1);
  const auto cands = model.candidates(inst);
  std::vector<std::string> texts;
  for (const auto& c : cands) texts.push_back(c.text);
  CHECK(texts == std::vector<std::string>{"st johns", "in clinton county", "clinton county", "7 865",
                                          "the city", "us 127"});
  CHECK(gold_index(inst, cands) == 1);
  CHECK(cands[2].path.has_value());
  CHECK_FALSE(cands[2].path->num_hops() == 0);
}
