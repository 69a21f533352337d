#include "kbmrc/experiment.hpp"

#include <chrono>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "kbmrc/candidates.hpp"
#include "kbmrc/errors.hpp"
#include "kbmrc/metrics.hpp"
#include "kbmrc/nn/checkpoint.hpp"

namespace kbmrc {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const int x = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "' expects an integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "' expects a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("config key '" + key + "' expects true or false, got '" + v + "'");
}

void require_file(const fs::path& p, const std::string& what) {
  if (p.empty()) throw UsageError(what + " is not set");
  if (!fs::is_regular_file(p)) throw DataError(what + " not found: " + p.string());
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  using Setter = std::function<void(const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"model", [&](const std::string& v) { model = v; }},
      {"kb", [&](const std::string& v) { kb = v; }},
      {"kb_dir", [&](const std::string& v) { kb_dir = v; }},
      {"train", [&](const std::string& v) { train_path = v; }},
      {"dev", [&](const std::string& v) { dev_path = v; }},
      {"test", [&](const std::string& v) { test_path = v; }},
      {"paraphrase_train", [&](const std::string& v) { paraphrase_train = v; }},
      {"paraphrase_heldout", [&](const std::string& v) { paraphrase_heldout = v; }},
      {"output", [&](const std::string& v) { output_dir = v; }},
      {"seed",
       [&](const std::string& v) {
         const auto s = static_cast<std::uint64_t>(to_int(key, v));
         train.seed = s;
         qg.seed = s;
         paraphrase.seed = s;
       }},
      {"margin", [&](const std::string& v) { train.margin = to_double(key, v); }},
      {"negatives", [&](const std::string& v) { train.negatives = to_int(key, v); }},
      {"lambda", [&](const std::string& v) { train.lambda = to_double(key, v); }},
      {"lambda_grid", [&](const std::string& v) { lambda_grid = to_bool(key, v); }},
      {"normalize_fusion", [&](const std::string& v) { train.normalize_fusion = to_bool(key, v); }},
      {"learning_rate", [&](const std::string& v) { train.learning_rate = to_double(key, v); }},
      {"epochs", [&](const std::string& v) { train.epochs = to_int(key, v); }},
      {"batch_size", [&](const std::string& v) { train.batch_size = to_int(key, v); }},
      {"lr_decay", [&](const std::string& v) { train.lr_decay = to_double(key, v); }},
      {"clip_norm", [&](const std::string& v) { train.clip_norm = to_double(key, v); }},
      {"target_dev_p1", [&](const std::string& v) { train.target_dev_p1 = to_double(key, v); }},
      {"embedding_dim", [&](const std::string& v) { embedding_dim = to_int(key, v); }},
      {"hidden_dim", [&](const std::string& v) { hidden_dim = to_int(key, v); }},
      {"hops", [&](const std::string& v) { hops = to_int(key, v); }},
      {"max_hops", [&](const std::string& v) { max_hops = to_int(key, v); }},
      {"share_element_encoder",
       [&](const std::string& v) { share_element_encoder = to_bool(key, v); }},
      {"identity_hop_init", [&](const std::string& v) { identity_hop_init = to_bool(key, v); }},
      {"identity_value_init",
       [&](const std::string& v) { identity_value_init = to_bool(key, v); }},
      {"kv_init_scale", [&](const std::string& v) { kv_init_scale = to_double(key, v); }},
      {"kv_embedding_init_scale",
       [&](const std::string& v) { kv_embedding_init_scale = to_double(key, v); }},
      {"fusion_base", [&](const std::string& v) { fusion_base = v; }},
      {"trace", [&](const std::string& v) { trace = to_bool(key, v); }},
      {"verbose",
       [&](const std::string& v) {
         train.verbose = qg.verbose = paraphrase.verbose = to_bool(key, v);
       }},
      {"qg_embedding_dim", [&](const std::string& v) { qg.embedding_dim = to_int(key, v); }},
      {"qg_hidden_dim", [&](const std::string& v) { qg.hidden_dim = to_int(key, v); }},
      {"qg_epochs", [&](const std::string& v) { qg.epochs = to_int(key, v); }},
      {"qg_learning_rate", [&](const std::string& v) { qg.learning_rate = to_double(key, v); }},
      {"qg_batch_size", [&](const std::string& v) { qg.batch_size = to_int(key, v); }},
      {"qg_beam", [&](const std::string& v) { qg.beam_width = to_int(key, v); }},
      {"qg_max_len", [&](const std::string& v) { qg.max_len = to_int(key, v); }},
      {"qg_min_count", [&](const std::string& v) { qg.min_count = to_int(key, v); }},
      {"qg_copy", [&](const std::string& v) { qg.copy = to_bool(key, v); }},
      {"paraphrase_embedding_dim",
       [&](const std::string& v) { paraphrase.embedding_dim = to_int(key, v); }},
      {"paraphrase_hidden_dim",
       [&](const std::string& v) { paraphrase.hidden_dim = to_int(key, v); }},
      {"paraphrase_epochs", [&](const std::string& v) { paraphrase.epochs = to_int(key, v); }},
      {"paraphrase_learning_rate",
       [&](const std::string& v) { paraphrase.learning_rate = to_double(key, v); }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw UsageError("unknown config key '" + key + "'");
  it->second(value);
}

ExperimentConfig ExperimentConfig::from_string(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto cfg = from_string(ss.str());
  // Relative data paths are taken relative to the config file.
  const fs::path base = path.parent_path();
  for (fs::path* p : {&cfg.kb_dir, &cfg.train_path, &cfg.dev_path, &cfg.test_path,
                      &cfg.paraphrase_train, &cfg.paraphrase_heldout}) {
    if (!p->empty() && p->is_relative()) *p = base / *p;
  }
  return cfg;
}

json ExperimentConfig::to_json() const {
  return {{"model", model},
          {"kb", kb},
          {"kb_dir", kb_dir.string()},
          {"train", train_path.string()},
          {"dev", dev_path.string()},
          {"test", test_path.string()},
          {"paraphrase_train", paraphrase_train.string()},
          {"paraphrase_heldout", paraphrase_heldout.string()},
          {"seed", train.seed},
          {"margin", train.margin},
          {"negatives", train.negatives},
          {"lambda", train.lambda},
          {"lambda_grid", lambda_grid},
          {"normalize_fusion", train.normalize_fusion},
          {"learning_rate", train.learning_rate},
          {"epochs", train.epochs},
          {"batch_size", train.batch_size},
          {"lr_decay", train.lr_decay},
          {"clip_norm", train.clip_norm},
          {"embedding_dim", embedding_dim},
          {"hidden_dim", hidden_dim},
          {"hops", hops},
          {"max_hops", max_hops},
          {"share_element_encoder", share_element_encoder},
          {"identity_hop_init", identity_hop_init},
          {"identity_value_init", identity_value_init},
          {"kv_init_scale", kv_init_scale},
          {"kv_embedding_init_scale", kv_embedding_init_scale},
          {"fusion_base", fusion_base},
          {"qg_embedding_dim", qg.embedding_dim},
          {"qg_hidden_dim", qg.hidden_dim},
          {"qg_epochs", qg.epochs},
          {"qg_learning_rate", qg.learning_rate},
          {"qg_beam", qg.beam_width},
          {"qg_max_len", qg.max_len},
          {"qg_copy", qg.copy},
          {"paraphrase_epochs", paraphrase.epochs},
          {"paraphrase_learning_rate", paraphrase.learning_rate},
          {"fusion_shortlist", kFusionShortlist}};
}

void ExperimentConfig::validate() const {
  static const std::vector<std::string> models = {"pcnet", "kvmemnet", "qgnet", "fused"};
  if (std::find(models.begin(), models.end(), model) == models.end()) {
    throw UsageError("unknown model '" + model + "' (pcnet, kvmemnet, qgnet, fused)");
  }
  if (model == "fused" && fusion_base != "pcnet" && fusion_base != "kvmemnet") {
    throw UsageError("fusion_base must be pcnet or kvmemnet");
  }
  if (kb != "none" && !is_external_kb_slot(kb)) throw UsageError("unknown external KB '" + kb + "'");
  if (hops < 1 || hops > 3) throw UsageError("hops must be in [1, 3]");
  if (max_hops < 1 || max_hops > 2) throw UsageError("max_hops must be 1 or 2");
  if (embedding_dim < 1 || hidden_dim < 1) throw UsageError("dimensions must be positive");
  if (qg.beam_width < 1 || qg.max_len < 1) throw UsageError("qg_beam and qg_max_len must be >= 1");
  train.validate();
  require_file(train_path, "training data");
  require_file(dev_path, "dev data");
  if (!test_path.empty()) require_file(test_path, "test data");
  if (kb != "none") require_file(kb_dir / (kb + ".jsonl"), "external KB " + kb);
  if (model == "qgnet" || model == "fused") {
    require_file(paraphrase_train, "paraphrase corpus");
    if (!paraphrase_heldout.empty()) require_file(paraphrase_heldout, "paraphrase held-out corpus");
  }
}

std::unique_ptr<QaModel> make_qa_model(const std::string& kind, Vocabulary vocab,
                                       const ExperimentConfig& config) {
  if (kind == "pcnet") {
    PcNetConfig c;
    c.embedding_dim = config.embedding_dim;
    c.hidden_dim = config.hidden_dim;
    c.share_element_encoder = config.share_element_encoder;
    c.max_hops = config.max_hops;
    return std::make_unique<PcNet>(std::move(vocab), c, config.train.seed);
  }
  if (kind == "kvmemnet") {
    KvMemNetConfig c;
    c.embedding_dim = config.embedding_dim;
    c.hidden_dim = config.hidden_dim;
    c.hops = config.hops;
    c.identity_hop_init = config.identity_hop_init;
    c.identity_value_init = config.identity_value_init;
    c.init_scale = config.kv_init_scale;
    c.embedding_init_scale = config.kv_embedding_init_scale;
    return std::make_unique<KvMemNet>(std::move(vocab), c, config.train.seed);
  }
  throw UsageError("not a QA model: " + kind);
}

namespace {

json checkpoint_metadata(const fs::path& path, nn::Checkpoint& ckpt) {
  ckpt = nn::load_checkpoint(path);
  try {
    return json::parse(ckpt.metadata);
  } catch (const json::exception& e) {
    throw DataError("checkpoint metadata is not JSON: " + std::string(e.what()));
  }
}

}  // namespace

std::unique_ptr<QaModel> load_qa_model(const fs::path& checkpoint) {
  nn::Checkpoint ckpt;
  const json meta = checkpoint_metadata(checkpoint, ckpt);
  try {
    const std::string kind = meta.at("model");
    auto vocab = Vocabulary::from_tokens(meta.at("vocab").get<std::vector<std::string>>());
    std::unique_ptr<QaModel> model;
    if (kind == "pcnet") {
      PcNetConfig c;
      c.embedding_dim = meta.at("embedding_dim");
      c.hidden_dim = meta.at("hidden_dim");
      c.share_element_encoder = meta.at("share_element_encoder");
      c.max_hops = meta.at("max_hops");
      model = std::make_unique<PcNet>(std::move(vocab), c, 0);
    } else if (kind == "kvmemnet") {
      KvMemNetConfig c;
      c.embedding_dim = meta.at("embedding_dim");
      c.hidden_dim = meta.at("hidden_dim");
      c.hops = meta.at("hops");
      model = std::make_unique<KvMemNet>(std::move(vocab), c, 0);
    } else {
      throw DataError("checkpoint holds a '" + kind + "' model, not a QA model");
    }
    nn::restore_parameters(ckpt, model->parameters());
    return model;
  } catch (const json::exception& e) {
    throw DataError("bad checkpoint metadata: " + std::string(e.what()));
  }
}

std::unique_ptr<QgModel> load_qg_model(const fs::path& checkpoint) {
  nn::Checkpoint ckpt;
  const json meta = checkpoint_metadata(checkpoint, ckpt);
  try {
    if (meta.at("model") != "qgnet") throw DataError("checkpoint does not hold a QG model");
    QgConfig c;
    c.embedding_dim = meta.at("embedding_dim");
    c.hidden_dim = meta.at("hidden_dim");
    c.copy = meta.at("copy");
    auto model = std::make_unique<QgModel>(
        Vocabulary::from_tokens(meta.at("source_vocab").get<std::vector<std::string>>()),
        Vocabulary::from_tokens(meta.at("target_vocab").get<std::vector<std::string>>()), c, 0);
    nn::restore_parameters(ckpt, model->parameters());
    return model;
  } catch (const json::exception& e) {
    throw DataError("bad checkpoint metadata: " + std::string(e.what()));
  }
}

std::unique_ptr<ParaphraseModel> load_paraphrase_model(const fs::path& checkpoint) {
  nn::Checkpoint ckpt;
  const json meta = checkpoint_metadata(checkpoint, ckpt);
  try {
    if (meta.at("model") != "paraphrase") throw DataError("checkpoint does not hold a paraphrase model");
    ParaphraseConfig c;
    c.embedding_dim = meta.at("embedding_dim");
    c.hidden_dim = meta.at("hidden_dim");
    auto model = std::make_unique<ParaphraseModel>(
        Vocabulary::from_tokens(meta.at("vocab").get<std::vector<std::string>>()), c, 0);
    nn::restore_parameters(ckpt, model->parameters());
    return model;
  } catch (const json::exception& e) {
    throw DataError("bad checkpoint metadata: " + std::string(e.what()));
  }
}

std::string prediction_dump(const std::vector<Instance>& instances,
                            const std::vector<Prediction>& predictions) {
  std::ostringstream out;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& p = predictions[i];
    json ranking = json::array();
    for (const int k : p.order) {
      const auto ks = static_cast<std::size_t>(k);
      ranking.push_back({{"candidate", p.candidates[ks].text}, {"score", p.scores[ks]}});
    }
    const json rec = {{"index", i},
                      {"doc_id", instances[i].doc_id},
                      {"question", instances[i].question},
                      {"prediction", p.top_text()},
                      {"gold", instances[i].answer_text()},
                      {"correct", !p.abstained() && p.top_text() == instances[i].answer_text()},
                      {"ranking", ranking}};
    out << rec.dump() << '\n';
  }
  return out.str();
}

std::shared_ptr<const FactIndex> load_fact_index(const ExperimentConfig& config) {
  if (config.kb == "none") return nullptr;
  auto kb = std::make_shared<const ExternalKB>(
      load_external_kb(config.kb_dir / (config.kb + ".jsonl"), config.kb));
  return std::make_shared<const FactIndex>(FactIndex::build(kb));
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

json qa_report(const TrainReport& r) {
  return {{"model", r.model},
          {"seed", r.seed},
          {"epoch_loss", r.epoch_loss},
          {"dev_p1_curve", r.dev_p1},
          {"skipped_instances", r.skipped},
          {"train_seconds", r.seconds}};
}

std::vector<ParaphrasePair> heldout_split(std::vector<ParaphrasePair>& train) {
  // Without a held-out file every tenth pair is held out.
  std::vector<ParaphrasePair> kept, heldout;
  for (std::size_t i = 0; i < train.size(); ++i) {
    (i % 10 == 9 ? heldout : kept).push_back(std::move(train[i]));
  }
  train = std::move(kept);
  return heldout;
}

}  // namespace

json run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  const auto train_set = load_instances(config.train_path);
  const auto dev_set = load_instances(config.dev_path);
  const auto test_set =
      config.test_path.empty() ? std::vector<Instance>{} : load_instances(config.test_path);
  if (train_set.empty()) throw DataError("training data is empty");
  if (dev_set.empty()) throw DataError("dev data is empty");
  const auto index = load_fact_index(config);
  fs::create_directories(config.output_dir);

  json report = {{"config", config.to_json()}, {"seed", config.train.seed}};
  const auto cov = coverage_report(dev_set);
  report["dev_coverage"] = {{"one_hop", cov.coverage_1hop}, {"two_hop", cov.coverage_2hop}};

  const bool needs_qa = config.model == "pcnet" || config.model == "kvmemnet" ||
                        config.model == "fused";
  const bool needs_qg = config.model == "qgnet" || config.model == "fused";
  const std::string qa_kind = config.model == "fused" ? config.fusion_base : config.model;

  std::unique_ptr<QaModel> qa;
  if (needs_qa) {
    qa = make_qa_model(qa_kind, build_qa_vocabulary(train_set, index ? &index->kb() : nullptr),
                       config);
    qa->attach_external_kb(index);
    const auto tr = train(*qa, train_set, dev_set, config.train);
    report[qa_kind] = qa_report(tr);
    nn::save_checkpoint(config.output_dir / "qa.ckpt", qa->parameters(), qa->metadata());

    const auto dev_preds = predict_all(*qa, dev_set);
    report[qa_kind]["dev_p1"] = precision_at_1(dev_preds, dev_set);
    if (!test_set.empty()) {
      report[qa_kind]["test_p1"] = precision_at_1(predict_all(*qa, test_set), test_set);
    }
    if (config.model != "fused") {
      write_text(config.output_dir / "predictions.jsonl", prediction_dump(dev_set, dev_preds));
    }
    if (config.trace && qa_kind == "kvmemnet") {
      const auto& kv = static_cast<const KvMemNet&>(*qa);
      std::ostringstream out;
      for (const auto& inst : dev_set) {
        const auto cands = kv.candidates(inst);
        if (cands.empty()) continue;
        nn::Graph g;
        AttentionTrace trace;
        kv.score_traced(g, inst, cands, &trace);
        write_attention_trace(out, inst.doc_id, build_memory(inst.kb), trace);
      }
      write_text(config.output_dir / "attention.jsonl", out.str());
    }
  }

  if (needs_qg) {
    auto corpus = load_paraphrase_corpus(config.paraphrase_train);
    auto heldout = config.paraphrase_heldout.empty()
                       ? heldout_split(corpus)
                       : load_paraphrase_corpus(config.paraphrase_heldout);
    ParaphraseModel para(build_paraphrase_vocabulary(corpus), config.paraphrase,
                         config.paraphrase.seed);
    const auto pr = train_paraphrase(para, corpus, heldout);
    report["paraphrase"] = {{"epoch_loss", pr.epoch_loss},
                            {"heldout_accuracy", pr.heldout_accuracy},
                            {"train_seconds", pr.seconds}};
    nn::save_checkpoint(config.output_dir / "paraphrase.ckpt", para.parameters(), para.metadata());

    const auto qg_train = qg_examples(train_set);
    const auto qg_dev = qg_examples(dev_set);
    QgModel qg(build_qg_source_vocabulary(qg_train),
               build_qg_target_vocabulary(qg_train, config.qg.min_count), config.qg,
               config.qg.seed);
    qg.attach_external_kb(index);
    const auto qr = train_qg(qg, qg_train, qg_dev);
    report["qgnet"] = {{"epoch_loss", qr.epoch_loss},
                       {"dev_bleu", qr.dev_bleu},
                       {"train_seconds", qr.seconds}};
    nn::save_checkpoint(config.output_dir / "qg.ckpt", qg.parameters(), qg.metadata());

    // QG alone ranks every argument candidate by f_qg.
    const auto qg_only = fusion_scores_all(nullptr, &qg, &para, dev_set,
                                           std::numeric_limits<std::size_t>::max());
    std::vector<Prediction> qg_preds;
    for (const auto& s : qg_only) qg_preds.push_back(fused_prediction(s, 0.0, false));
    report["qgnet"]["dev_p1"] = precision_at_1(qg_preds, dev_set);
    if (config.model == "qgnet") {
      write_text(config.output_dir / "predictions.jsonl", prediction_dump(dev_set, qg_preds));
    }

    if (config.model == "fused") {
      const auto scores = fusion_scores_all(qa.get(), &qg, &para, dev_set);
      double lambda = config.train.lambda;
      json fusion = {{"shortlist", kFusionShortlist},
                     {"normalize", config.train.normalize_fusion}};
      if (config.lambda_grid) {
        const auto grid = lambda_grid();
        const auto sel = select_lambda(scores, dev_set, config.train.normalize_fusion, grid);
        lambda = sel.lambda;
        fusion["grid"] = sel.grid;
        fusion["grid_dev_p1"] = sel.grid_p1;
      }
      std::vector<Prediction> preds;
      for (const auto& s : scores) {
        preds.push_back(fused_prediction(s, lambda, config.train.normalize_fusion));
      }
      fusion["lambda"] = lambda;
      fusion["dev_p1"] = precision_at_1(preds, dev_set);
      if (!test_set.empty()) {
        const auto test_scores = fusion_scores_all(qa.get(), &qg, &para, test_set);
        std::vector<Prediction> test_preds;
        for (const auto& s : test_scores) {
          test_preds.push_back(fused_prediction(s, lambda, config.train.normalize_fusion));
        }
        fusion["test_p1"] = precision_at_1(test_preds, test_set);
      }
      report["fused"] = fusion;
      write_text(config.output_dir / "predictions.jsonl", prediction_dump(dev_set, preds));
    }

    std::ostringstream gen;
    for (std::size_t i = 0; i < dev_set.size(); ++i) {
      const auto cands = all_argument_candidates(dev_set[i]);
      for (std::size_t c = 0; c < cands.size(); ++c) {
        Generation g;
        const double f = qg_score(dev_set[i].question_tokens, qg_source(dev_set[i], cands[c]), qg,
                                  para, &g);
        gen << json{{"instance", dev_set[i].doc_id},
                    {"candidate", c},
                    {"candidate_text", cands[c].text},
                    {"generated", join_tokens(g.tokens)},
                    {"log_prob", g.log_prob},
                    {"f_qg", f}}
                   .dump()
            << '\n';
      }
    }
    write_text(config.output_dir / "generated.jsonl", gen.str());
  }

  report["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_text(config.output_dir / "report.json", report.dump(2) + "\n");
  return report;
}

}  // namespace kbmrc
