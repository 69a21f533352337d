// kbmrc command-line entry point.
//
//   kbmrc train --config run.cfg [--model kvmemnet --kb none --hops 2 ...]
//   kbmrc eval --checkpoint run/qa.ckpt --data dev.jsonl
//   kbmrc generate --qg run/qg.ckpt --paraphrase run/paraphrase.ckpt --data dev.jsonl
//   kbmrc coverage --data dev.jsonl
//   kbmrc paraphrase-train --corpus train.tsv --out para.ckpt
//   kbmrc make-fixtures --out fixtures
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "kbmrc/candidates.hpp"
#include "kbmrc/errors.hpp"
#include "kbmrc/experiment.hpp"
#include "kbmrc/fixtures.hpp"
#include "kbmrc/metrics.hpp"
#include "kbmrc/nn/checkpoint.hpp"

namespace {

using namespace kbmrc;
using json = nlohmann::json;

struct Overrides {
  std::optional<std::string> model, kb, kb_dir;
  std::optional<int> hops;
  std::optional<double> margin, lambda;
  std::optional<std::uint64_t> seed;
  std::string config;
};

void add_common(CLI::App* app, Overrides& o, bool with_config) {
  app->add_option("--model", o.model, "pcnet | kvmemnet | qgnet | fused");
  app->add_option("--kb", o.kb, "none | freebase-mini | probase-mini | nell-mini | reverb-mini");
  app->add_option("--kb-dir", o.kb_dir, "directory holding <kb>.jsonl");
  app->add_option("--hops", o.hops, "KVMemNet memory hops (1-3)");
  app->add_option("--margin", o.margin, "ranking loss margin");
  app->add_option("--lambda", o.lambda, "fusion weight on the QA score");
  app->add_option("--seed", o.seed, "random seed");
  if (with_config) app->add_option("--config", o.config, "flat key = value config file");
}

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : ExperimentConfig::from_file(o.config);
  if (o.model) cfg.set("model", *o.model);
  if (o.kb) cfg.set("kb", *o.kb);
  if (o.kb_dir) cfg.set("kb_dir", *o.kb_dir);
  if (o.hops) cfg.set("hops", std::to_string(*o.hops));
  if (o.margin) cfg.train.margin = *o.margin;
  if (o.lambda) cfg.train.lambda = *o.lambda;
  if (o.seed) cfg.set("seed", std::to_string(*o.seed));
  return cfg;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
}

int run(int argc, char** argv) {
  CLI::App app{"Question answering over document triplet KBs"};
  app.require_subcommand(1);

  Overrides train_o;
  std::vector<std::string> sets;
  auto* train_cmd = app.add_subcommand("train", "train and evaluate a configured pipeline");
  add_common(train_cmd, train_o, true);
  train_cmd->add_option("--set", sets, "extra key=value config overrides");
  std::string train_data, dev_data, out_dir;
  train_cmd->add_option("--train", train_data, "training instances (.jsonl)");
  train_cmd->add_option("--dev", dev_data, "dev instances (.jsonl)");
  train_cmd->add_option("--out", out_dir, "output directory");

  Overrides eval_o;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained PCNet or KVMemNet checkpoint");
  add_common(eval_cmd, eval_o, false);
  std::string eval_ckpt, eval_data, eval_out;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint from train")->required();
  eval_cmd->add_option("--data", eval_data, "instances (.jsonl)")->required();
  eval_cmd->add_option("--predictions", eval_out, "write prediction records here");

  std::string gen_qg, gen_para, gen_data, gen_out;
  auto* gen_cmd = app.add_subcommand("generate", "generate questions for every candidate");
  gen_cmd->add_option("--qg", gen_qg, "QG checkpoint")->required();
  gen_cmd->add_option("--paraphrase", gen_para, "paraphrase checkpoint for f_qg");
  gen_cmd->add_option("--data", gen_data, "instances (.jsonl)")->required();
  gen_cmd->add_option("--out", gen_out, "output file (default stdout)");

  std::string cov_data;
  auto* cov_cmd = app.add_subcommand("coverage", "answer coverage of 1- and 2-hop candidates");
  cov_cmd->add_option("--data", cov_data, "instances (.jsonl)")->required();

  std::string para_corpus, para_heldout, para_out;
  ParaphraseConfig para_cfg;
  auto* para_cmd = app.add_subcommand("paraphrase-train", "train the paraphrase scorer");
  para_cmd->add_option("--corpus", para_corpus, "label<TAB>a<TAB>b training pairs")->required();
  para_cmd->add_option("--heldout", para_heldout, "held-out pairs");
  para_cmd->add_option("--out", para_out, "checkpoint path")->required();
  para_cmd->add_option("--epochs", para_cfg.epochs);
  para_cmd->add_option("--learning-rate", para_cfg.learning_rate);
  para_cmd->add_option("--seed", para_cfg.seed);

  std::string fix_out;
  std::uint64_t fix_seed = 1;
  auto* fix_cmd = app.add_subcommand("make-fixtures", "write the synthetic datasets");
  fix_cmd->add_option("--out", fix_out, "output directory")->required();
  fix_cmd->add_option("--seed", fix_seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*train_cmd) {
    auto cfg = resolve(train_o);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value, got " + kv);
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!train_data.empty()) cfg.train_path = train_data;
    if (!dev_data.empty()) cfg.dev_path = dev_data;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    const auto report = run_experiment(cfg);
    std::cout << report.dump(2) << '\n';
    return 0;
  }

  if (*eval_cmd) {
    auto cfg = resolve(eval_o);
    auto model = load_qa_model(eval_ckpt);
    if (eval_o.model && *eval_o.model != model->kind()) {
      throw UsageError("checkpoint holds " + model->kind() + ", not " + *eval_o.model);
    }
    model->attach_external_kb(load_fact_index(cfg));
    const auto data = load_instances(eval_data);
    if (data.empty()) throw DataError("no instances in " + eval_data);
    const auto preds = predict_all(*model, data);
    if (!eval_out.empty()) write_file(eval_out, prediction_dump(data, preds));
    std::cout << json{{"model", model->kind()}, {"p1", precision_at_1(preds, data)},
                      {"instances", data.size()}}
                     .dump()
              << '\n';
    return 0;
  }

  if (*gen_cmd) {
    const auto qg = load_qg_model(gen_qg);
    const auto para = gen_para.empty() ? nullptr : load_paraphrase_model(gen_para);
    const auto data = load_instances(gen_data);
    std::ofstream file;
    if (!gen_out.empty()) {
      file.open(gen_out);
      if (!file) throw DataError("cannot write " + gen_out);
    }
    std::ostream& out = gen_out.empty() ? std::cout : file;
    for (const auto& inst : data) {
      const auto cands = all_argument_candidates(inst);
      for (std::size_t c = 0; c < cands.size(); ++c) {
        const auto source = qg_source(inst, cands[c]);
        Generation g;
        json rec = {{"instance", inst.doc_id}, {"candidate", c}, {"candidate_text", cands[c].text}};
        if (para) {
          rec["f_qg"] = qg_score(inst.question_tokens, source, *qg, *para, &g);
        } else {
          g = qg->generate(source);
        }
        rec["generated"] = join_tokens(g.tokens);
        rec["log_prob"] = g.log_prob;
        out << rec.dump() << '\n';
      }
    }
    return 0;
  }

  if (*cov_cmd) {
    const auto data = load_instances(cov_data);
    const auto cov = coverage_report(data);
    const auto st = kb_statistics(data);
    std::cout << json{{"instances", cov.num_instances},
                      {"coverage_1hop", cov.coverage_1hop},
                      {"coverage_2hop", cov.coverage_2hop},
                      {"facts_per_doc", st.facts_per_doc},
                      {"arguments_per_doc", st.arguments_per_doc},
                      {"predicates_per_doc", st.predicates_per_doc},
                      {"words_per_argument", st.words_per_argument},
                      {"words_per_predicate", st.words_per_predicate},
                      {"words_per_question", st.words_per_question}}
                     .dump(2)
              << '\n';
    return 0;
  }

  if (*para_cmd) {
    const auto corpus = load_paraphrase_corpus(para_corpus);
    const auto heldout = para_heldout.empty() ? std::vector<ParaphrasePair>{}
                                              : load_paraphrase_corpus(para_heldout);
    ParaphraseModel model(build_paraphrase_vocabulary(corpus), para_cfg, para_cfg.seed);
    const auto r = train_paraphrase(model, corpus, heldout);
    nn::save_checkpoint(para_out, model.parameters(), model.metadata());
    json rep = {{"epoch_loss", r.epoch_loss}, {"train_seconds", r.seconds}};
    if (!heldout.empty()) rep["heldout_accuracy"] = r.heldout_accuracy;
    std::cout << rep.dump(2) << '\n';
    return 0;
  }

  if (*fix_cmd) {
    for (const auto& p : write_fixtures(fix_out, fix_seed)) std::cout << p.string() << '\n';
    return 0;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
