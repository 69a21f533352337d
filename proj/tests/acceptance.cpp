// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers as
// arguments to run a subset. Exit status is the number of failures.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "kbmrc/candidates.hpp"
#include "kbmrc/experiment.hpp"
#include "kbmrc/fixtures.hpp"
#include "kbmrc/fusion.hpp"
#include "kbmrc/kvmemnet.hpp"
#include "kbmrc/metrics.hpp"
#include "kbmrc/nn/grad_check.hpp"
#include "kbmrc/paraphrase.hpp"
#include "kbmrc/pcnet.hpp"
#include "kbmrc/qgen.hpp"
#include "kbmrc/ranker.hpp"
#include "oracles.hpp"

using namespace kbmrc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

// ---------------------------------------------------------------------------

Outcome gradient_fidelity() {
  const auto started = std::chrono::steady_clock::now();
  const auto fx = chain_fixture(11, 4, 1);
  const auto& inst = fx.train[0];
  const auto qa_vocab = build_qa_vocabulary(fx.train);
  const std::vector<ParaphrasePair> pairs = {
      {tokenize("what is the capital of mora"), tokenize("mora has which capital"), true},
      {tokenize("what is the capital of mora"), tokenize("what is the anthem of mora"), false}};

  // A copy-only source word: it is absent from the target vocabulary.
  const std::vector<Element> src = {Element::make("st johns", Role::kSubject),
                                    Element::make("is located", Role::kPredicate),
                                    Element::make("in clinton county", Role::kObject)};
  std::vector<QgExample> qg_ex = {{src, tokenize("where is st")}};
  const auto qg_src_vocab = build_qg_source_vocabulary(qg_ex);
  const auto qg_tgt_vocab = build_qg_target_vocabulary(qg_ex, 1);

  double worst = 0;
  std::string worst_name;
  auto note = [&](const std::string& name, const nn::GradCheckResult& r) {
    if (r.max_relative_error > worst) {
      worst = r.max_relative_error;
      worst_name = name + ":" + r.worst_parameter;
    }
  };
  for (std::uint64_t seed : {1, 2, 3}) {
    {
      PcNetConfig c;
      c.embedding_dim = 8;
      c.hidden_dim = 5;
      c.init_scale = 0.3;
      PcNet m(qa_vocab, c, seed);
      const auto cands = m.candidates(inst);
      auto loss = [&](nn::Graph& g) {
        const auto s = m.score(g, inst, cands);
        return ranking_loss(g, s[0], std::vector<nn::Var>(s.begin() + 1, s.end()), 5.0);
      };
      note("pcnet", nn::grad_check(loss, m.parameters(), 1e-4, 6, seed));
    }
    {
      KvMemNetConfig c;
      c.embedding_dim = 6;
      c.hidden_dim = 4;
      c.hops = 2;
      c.identity_hop_init = false;
      KvMemNet m(qa_vocab, c, seed);
      const auto cands = m.candidates(inst);
      auto loss = [&](nn::Graph& g) {
        const auto s = m.score(g, inst, cands);
        return ranking_loss(g, s[0], std::vector<nn::Var>(s.begin() + 1, s.end()), 1.0);
      };
      note("kvmemnet", nn::grad_check(loss, m.parameters(), 1e-4, 6, seed));
    }
    {
      QgConfig c;
      c.embedding_dim = 6;
      c.hidden_dim = 5;
      c.init_scale = 0.4;
      QgModel m(qg_src_vocab, qg_tgt_vocab, c, seed);
      auto loss = [&](nn::Graph& g) {
        const auto enc = m.encode(g, src);
        const auto st = m.step(g, enc, enc.final, kBos);
        return g.scale(m.word_log_prob(g, enc, st.log_probs, "johns"), -1.0);
      };
      note("qg-step", nn::grad_check(loss, m.parameters(), 1e-4, 6, seed));
    }
    {
      ParaphraseConfig c;
      c.embedding_dim = 6;
      c.hidden_dim = 4;
      c.init_scale = 0.5;
      ParaphraseModel m(build_paraphrase_vocabulary(pairs), c, seed);
      auto loss = [&](nn::Graph& g) {
        return g.scale(g.pick(m.log_probs(g, pairs[0].a, pairs[0].b), ParaphraseModel::kPositive), -1.0);
      };
      note("paraphrase", nn::grad_check(loss, m.parameters(), 1e-5, 6, seed));
    }
  }
  const double secs = seconds_since(started);
  return {worst <= 1e-3 && secs < 60.0,
          "max rel err " + fmt("%.2e", worst) + " (" + worst_name + "), " + fmt("%.1fs", secs)};
}

// ---------------------------------------------------------------------------

Outcome normalization() {
  std::mt19937_64 rng(2024);
  const auto chain = chain_fixture(5, 60, 1);
  const auto fus = fusion_fixture(5, 60, 1);
  const auto qg_ex = qg_examples(fus.data.train);
  const auto qa_vocab = build_qa_vocabulary(chain.train);
  const auto src_vocab = build_qg_source_vocabulary(qg_ex);
  const auto tgt_vocab = build_qg_target_vocabulary(qg_ex, 1);
  double worst = 0;
  std::size_t distributions = 0;
  auto check = [&](const std::vector<double>& p) {
    double s = 0;
    for (double v : p) s += v;
    worst = std::max(worst, std::abs(s - 1.0));
    ++distributions;
  };
  auto as_vec = [](const nn::Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };

  const int passes = 1000;
  for (int pass = 0; pass < passes; ++pass) {
    const std::uint64_t seed = rng();
    KvMemNetConfig kc;
    kc.embedding_dim = 6;
    kc.hidden_dim = 4;
    kc.hops = 1 + static_cast<int>(seed % 3);
    kc.identity_hop_init = false;
    KvMemNet kv(qa_vocab, kc, seed);
    const auto& inst = chain.train[rng() % chain.train.size()];
    nn::Graph g;
    AttentionTrace trace;
    kv.score_traced(g, inst, kv.candidates(inst), &trace);
    for (const auto& a : trace.alphas) check(a);

    QgConfig qc;
    qc.embedding_dim = 6;
    qc.hidden_dim = 5;
    qc.init_scale = 0.5;
    qc.copy = pass % 5 != 0;
    QgModel qg(src_vocab, tgt_vocab, qc, seed);
    const auto& ex = qg_ex[rng() % qg_ex.size()];
    nn::Graph qg_graph;
    const auto enc = qg.encode(qg_graph, ex.source);
    // A random previous state and word, so steps deep into decoding are covered.
    nn::Vector h = nn::Vector::Zero(qc.hidden_dim);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < h.size(); ++i) h(i) = u(rng);
    const auto prev = tgt_vocab.token(static_cast<int>(rng() % static_cast<unsigned>(tgt_vocab.size())));
    const auto st = qg.step(qg_graph, enc, qg_graph.constant(h), prev);
    check(as_vec(qg_graph.value(st.alpha)));
    check(as_vec(qg_graph.value(st.beta)));
    const nn::Vector joint = qg_graph.value(st.log_probs).array().exp().matrix();
    check(as_vec(joint));
  }
  return {worst <= 1e-6, std::to_string(passes) + " passes, " + std::to_string(distributions) +
                             " distributions, max |sum - 1| " + fmt("%.1e", worst)};
}

// ---------------------------------------------------------------------------

Outcome candidate_oracle() {
  std::mt19937_64 rng(77);
  int mismatches = 0, monotone_failures = 0, with_candidates = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = oracle::random_kb_instance(rng, 10);
    const auto anchors = detect_anchors(inst.question_tokens, inst.kb);
    const auto want_anchors = oracle::anchors(inst);
    bool same = anchors.size() == want_anchors.size();
    for (std::size_t i = 0; same && i < anchors.size(); ++i) {
      same = anchors[i].occurrence == want_anchors[i].occurrence && anchors[i].score == want_anchors[i].score;
    }
    std::set<Occurrence> terminals[3];
    for (int hops = 1; hops <= 2; ++hops) {
      const auto cands = enumerate_candidates(anchors, inst.kb, hops);
      const auto want = oracle::reachable(inst, anchors, hops);
      same = same && cands.size() == want.size();
      std::size_t i = 0;
      for (const auto& [occ, reach] : want) {
        if (!same) break;
        const auto& c = cands[i++];
        std::vector<int> key = {c.num_hops(), c.anchor.occurrence.fact, c.anchor.occurrence.slot};
        for (const auto& h : c.hops) key.insert(key.end(), {h.fact, h.entry_slot, h.exit_slot});
        same = c.terminal == occ && c.num_hops() == reach.hops && key == reach.key &&
               is_valid_path(c, inst.kb);
      }
      for (const auto& c : cands) terminals[hops].insert(c.terminal);
    }
    if (!terminals[2].empty()) ++with_candidates;
    if (!same) ++mismatches;
    if (!std::includes(terminals[2].begin(), terminals[2].end(), terminals[1].begin(), terminals[1].end())) {
      ++monotone_failures;
    }
  }
  return {mismatches == 0 && monotone_failures == 0,
          "200 KBs (" + std::to_string(with_candidates) + " with candidates), " +
              std::to_string(mismatches) + " oracle mismatches, " + std::to_string(monotone_failures) +
              " monotonicity failures"};
}

// ---------------------------------------------------------------------------

Outcome ranking_loss_contract() {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-2, 2), gap(1e-3, 1);
  double worst = 0;
  bool zero = true;
  // By hand: m = 0.1, pos 0.4, negs {0.2, 0.5, -1}: only 0.1 - 0.4 + 0.5 = 0.2 is positive.
  const double hand = ranking_loss(0.4, std::vector<double>{0.2, 0.5, -1.0}, 0.1);
  worst = std::abs(hand - 0.2);
  for (int trial = 0; trial < 20; ++trial) {
    const double m = 0.1;
    const double pos = u(rng);
    std::vector<double> negs(1 + rng() % 6);
    for (auto& n : negs) n = u(rng);
    worst = std::max(worst, std::abs(ranking_loss(pos, negs, m) - oracle::ranking_loss(pos, negs, m)));
    nn::Graph g;
    std::vector<nn::Var> nv;
    for (double n : negs) nv.push_back(g.constant(nn::Vector::Constant(1, n)));
    const double graph_loss = g.scalar(ranking_loss(g, g.constant(nn::Vector::Constant(1, pos)), nv, m));
    worst = std::max(worst, std::abs(graph_loss - oracle::ranking_loss(pos, negs, m)));
    for (auto& n : negs) n = pos - m - gap(rng);
    zero = zero && ranking_loss(pos, negs, m) == 0.0;
  }
  return {worst <= 1e-12 && zero, "20 fixtures, max |loss - oracle| " + fmt("%.1e", worst) +
                                      (zero ? ", zero when satisfied" : ", NONZERO when satisfied")};
}

// ---------------------------------------------------------------------------

Outcome separable_learning() {
  const auto fx = separable_fixture(1, 500, 100);
  const auto vocab = build_qa_vocabulary(fx.train);
  std::string detail;
  bool pass = true;
  for (const std::string kind : {"pcnet", "kvmemnet"}) {
    std::unique_ptr<QaModel> model;
    if (kind == "pcnet") model = std::make_unique<PcNet>(vocab, PcNetConfig{}, 1);
    else model = std::make_unique<KvMemNet>(vocab, KvMemNetConfig{}, 1);
    TrainConfig tc;
    tc.epochs = 30;
    const auto rep = train(*model, fx.train, fx.dev, tc);
    const double best = *std::max_element(rep.dev_p1.begin(), rep.dev_p1.end());
    const auto first = std::find_if(rep.dev_p1.begin(), rep.dev_p1.end(), [](double p) { return p >= 0.95; });
    const bool ok = best >= 0.95 && rep.seconds < 300.0;
    pass = pass && ok;
    detail += kind + " best " + fmt("%.2f", best) + " final " + fmt("%.2f", rep.dev_p1.back()) +
              (first != rep.dev_p1.end() ? " (>= 0.95 at epoch " + std::to_string(first - rep.dev_p1.begin() + 1) + ")" : "") +
              " in " + fmt("%.0fs", rep.seconds) + "; ";
  }
  return {pass, detail};
}

// ---------------------------------------------------------------------------

Outcome two_hop_necessity() {
  const auto started = std::chrono::steady_clock::now();
  std::string detail;
  bool pass = true;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto fx = chain_fixture(seed);
    const auto vocab = build_qa_vocabulary(fx.train);
    double p1[3] = {0, 0, 0};
    for (int hops : {1, 2}) {
      KvMemNetConfig kc;
      kc.hops = hops;
      KvMemNet m(vocab, kc, seed);
      TrainConfig tc;
      tc.epochs = 20;
      tc.lr_decay = 0.9;
      tc.seed = seed;
      train(m, fx.train, {}, tc);
      p1[hops] = precision_at_1(predict_all(m, fx.dev), fx.dev);
    }
    pass = pass && p1[2] >= 0.90 && p1[1] <= 0.60;
    detail += "seed " + std::to_string(seed) + ": n=2 " + fmt("%.2f", p1[2]) + " n=1 " + fmt("%.2f", p1[1]) + "; ";
  }
  const double secs = seconds_since(started);
  pass = pass && secs < 600.0;
  return {pass, detail + fmt("%.0fs", secs)};
}

// ---------------------------------------------------------------------------

Outcome external_kb_gain() {
  std::string detail;
  bool pass = true;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto fx = external_kb_fixture(seed);
    const auto index = std::make_shared<FactIndex>(FactIndex::build(std::make_shared<ExternalKB>(fx.kb)));
    double p1[2] = {0, 0};
    for (int with_kb : {0, 1}) {
      KvMemNet m(build_qa_vocabulary(fx.data.train, with_kb ? &fx.kb : nullptr), KvMemNetConfig{}, seed);
      if (with_kb) m.attach_external_kb(index);
      TrainConfig tc;
      tc.epochs = 15;
      tc.seed = seed;
      train(m, fx.data.train, {}, tc);
      p1[with_kb] = precision_at_1(predict_all(m, fx.data.dev), fx.data.dev);
    }
    const double gain = 100.0 * (p1[1] - p1[0]);
    pass = pass && gain >= 10.0;
    detail += "seed " + std::to_string(seed) + ": " + fmt("%.2f", p1[0]) + " -> " + fmt("%.2f", p1[1]) +
              " (+" + fmt("%.0f", gain) + "); ";
  }
  return {pass, detail};
}

// ---------------------------------------------------------------------------

Outcome fusion_sanity() {
  const auto fx = fusion_fixture(1);
  const auto& dev = fx.data.dev;
  KvMemNet kv(build_qa_vocabulary(fx.data.train), KvMemNetConfig{}, 1);
  TrainConfig tc;
  tc.epochs = 30;
  train(kv, fx.data.train, {}, tc);
  const double kv_p1 = precision_at_1(predict_all(kv, dev), dev);

  ParaphraseConfig pc;
  pc.epochs = 25;
  ParaphraseModel para(build_paraphrase_vocabulary(fx.paraphrase_train), pc, 1);
  const auto pr = train_paraphrase(para, fx.paraphrase_train, fx.paraphrase_heldout);

  const auto qg_train = qg_examples(fx.data.train);
  QgConfig qc;
  qc.epochs = 60;
  QgModel qg(build_qg_source_vocabulary(qg_train), build_qg_target_vocabulary(qg_train, 1), qc, 1);
  train_qg(qg, qg_train, {});

  const auto qg_only = fusion_scores_all(nullptr, &qg, &para, dev, std::numeric_limits<std::size_t>::max());
  std::vector<Prediction> qg_preds;
  for (const auto& s : qg_only) qg_preds.push_back(fused_prediction(s, 0.0, false));
  const double qg_p1 = precision_at_1(qg_preds, dev);

  const auto scores = fusion_scores_all(&kv, &qg, &para, dev);
  const auto grid = lambda_grid();
  const auto sel = select_lambda(scores, dev, true, grid);
  const double best_single = std::max(kv_p1, qg_p1);
  return {sel.p1 >= best_single,
          "kvmemnet " + fmt("%.2f", kv_p1) + ", qgnet " + fmt("%.2f", qg_p1) + ", fused " +
              fmt("%.2f", sel.p1) + " at lambda " + fmt("%.1f", sel.lambda) + " (paraphrase held-out " +
              fmt("%.2f", pr.heldout_accuracy) + ")"};
}

// ---------------------------------------------------------------------------

Outcome metric_oracles() {
  const oracle::BleuFixture fx;
  const double b = bleu(fx.candidates, fx.references);
  const double err = std::abs(b - fx.expected());
  const std::vector<TokenSequence> xs = {tokenize("where is st johns mi located"), tokenize("who founded it")};
  const double self = bleu(xs, xs);
  const std::vector<std::string> gold = {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"};
  auto pred = gold;
  pred[0] = "x";
  pred[3] = "";
  pred[7] = "y";
  const double p1 = precision_at_1(pred, gold);
  const bool pass = err <= 1e-9 && std::abs(self - 1.0) <= 1e-12 && p1 == 0.7 &&
                    precision_at_1(gold, gold) == 1.0;
  return {pass, "BLEU " + fmt("%.12f", b) + " vs " + fmt("%.12f", fx.expected()) + ", BLEU(x,x) " +
                    fmt("%.15f", self) + ", P@1 7/10 = " + fmt("%.2f", p1) + (p1 == 0.7 ? " exactly" : " INEXACT")};
}

// ---------------------------------------------------------------------------

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "kbmrc_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto fx = fusion_fixture(4, 60, 20);
  save_instances(dir / "train.jsonl", fx.data.train);
  save_instances(dir / "dev.jsonl", fx.data.dev);
  save_paraphrase_corpus(dir / "para.tsv", fx.paraphrase_train);
  std::string detail;
  bool pass = true;
  for (const std::string model : {"pcnet", "kvmemnet", "fused"}) {
    auto cfg = ExperimentConfig::from_string(
        "embedding_dim = 16\nhidden_dim = 16\nepochs = 3\nqg_epochs = 2\nqg_hidden_dim = 16\n"
        "qg_embedding_dim = 16\nparaphrase_epochs = 2\nparaphrase_hidden_dim = 8\n"
        "paraphrase_embedding_dim = 8\nlambda_grid = true\nseed = 5\n");
    cfg.set("model", model);
    cfg.train_path = dir / "train.jsonl";
    cfg.dev_path = dir / "dev.jsonl";
    cfg.paraphrase_train = dir / "para.tsv";
    std::string dumps[2];
    for (int run = 0; run < 2; ++run) {
      cfg.output_dir = dir / (model + std::to_string(run));
      run_experiment(cfg);
      std::ifstream in(cfg.output_dir / "predictions.jsonl", std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      dumps[run] = ss.str();
    }
    const bool same = !dumps[0].empty() && dumps[0] == dumps[1];
    pass = pass && same;
    detail += model + (same ? " identical (" + std::to_string(dumps[0].size()) + " bytes); " : " DIFFER; ");
  }
  fs::remove_all(dir);
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::pair<const char*, std::function<Outcome()>>> criteria = {
      {1, {"gradient fidelity", gradient_fidelity}},
      {2, {"softmax normalization", normalization}},
      {3, {"candidate oracle equivalence", candidate_oracle}},
      {4, {"ranking loss contract", ranking_loss_contract}},
      {5, {"separable fixture learning", separable_learning}},
      {6, {"two-hop necessity", two_hop_necessity}},
      {7, {"external KB gain", external_kb_gain}},
      {8, {"fusion sanity", fusion_sanity}},
      {9, {"metric oracles", metric_oracles}},
      {10, {"determinism", determinism}},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  std::printf("threads: %d\n", omp_get_max_threads());
  int failures = 0;
  for (const auto& [id, entry] : criteria) {
    if (!selected.empty() && !selected.contains(id)) continue;
    const auto started = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = entry.second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("criterion %2d %-30s %s  %s [%.1fs]\n", id, entry.first, o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), seconds_since(started));
    std::fflush(stdout);
  }
  return failures;
}
