#include "kbmrc/paraphrase.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "kbmrc/errors.hpp"
#include "kbmrc/nn/optimizer.hpp"
#include "kbmrc/synth.hpp"

namespace kbmrc {

ParaphraseModel::ParaphraseModel(Vocabulary vocab, const ParaphraseConfig& config,
                                 std::uint64_t seed)
    : vocab_(std::move(vocab)), config_(config) {
  const int d = config.embedding_dim;
  const int h = config.hidden_dim;
  emb_ = nn::EmbeddingTable::create(params_, "para.emb", vocab_.size(), d);
  fwd_ = nn::GruParams::create(params_, "para.fwd", d, h);
  bwd_ = nn::GruParams::create(params_, "para.bwd", d, h);
  w_o_ = &params_.add("para.w_o", 2, 2 * h);
  b_o_ = &params_.add("para.b_o", 2, 1);
  std::mt19937_64 rng(seed);
  params_.init_uniform(rng, -config.init_scale, config.init_scale);
  emb_.zero_padding_row();
}

nn::Var ParaphraseModel::encode(nn::Graph& g, const TokenSequence& q) const {
  const auto ids = vocab_.encode(q);
  return nn::encode_bidirectional(g, fwd_, bwd_, emb_, ids);
}

nn::Var ParaphraseModel::log_probs(nn::Graph& g, const TokenSequence& a,
                                   const TokenSequence& b) const {
  if (a.empty() || b.empty()) throw std::invalid_argument("paraphrase: empty question");
  const nn::Var u = encode(g, a);
  const nn::Var v = encode(g, b);
  return g.log_softmax(g.add(g.matvec(*w_o_, g.cmul(u, v)), g.bias(*b_o_)));
}

double ParaphraseModel::score(const TokenSequence& a, const TokenSequence& b) const {
  nn::Graph g;
  return std::exp(g.value(log_probs(g, a, b))(kPositive));
}

std::string ParaphraseModel::metadata() const {
  nlohmann::json j = {{"model", "paraphrase"},
                      {"embedding_dim", config_.embedding_dim},
                      {"hidden_dim", config_.hidden_dim},
                      {"vocab", vocab_.tokens()}};
  return j.dump();
}

Vocabulary build_paraphrase_vocabulary(const std::vector<ParaphrasePair>& pairs) {
  std::vector<TokenSequence> corpus;
  for (const auto& p : pairs) {
    corpus.push_back(p.a);
    corpus.push_back(p.b);
  }
  return Vocabulary::build(corpus);
}

double paraphrase_accuracy(const ParaphraseModel& model, const std::vector<ParaphrasePair>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("paraphrase_accuracy: no pairs");
  std::size_t correct = 0;
  for (const auto& p : pairs) {
    if ((model.score(p.a, p.b) >= 0.5) == p.positive) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

ParaphraseReport train_paraphrase(ParaphraseModel& model,
                                  const std::vector<ParaphrasePair>& train_pairs,
                                  const std::vector<ParaphrasePair>& heldout_pairs) {
  bool has_pos = false, has_neg = false;
  for (const auto& p : train_pairs) (p.positive ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) throw DataError("paraphrase training data needs both labels");
  const auto& cfg = model.config();
  const auto started = std::chrono::steady_clock::now();

  std::mt19937_64 rng(cfg.seed);
  nn::Adam adam({.learning_rate = cfg.learning_rate, .clip_norm = 5.0});
  auto& params = model.parameters();
  std::vector<std::size_t> order(train_pairs.size());
  std::iota(order.begin(), order.end(), 0);
  ParaphraseReport report;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    int in_batch = 0;
    params.zero_grad();
    for (const std::size_t i : order) {
      const auto& p = train_pairs[i];
      nn::Graph g;
      const nn::Var lp = model.log_probs(g, p.a, p.b);
      const nn::Var loss = g.scale(g.pick(lp, p.positive ? 1 : 0), -1.0);
      const double value = g.scalar(loss);
      if (!std::isfinite(value)) throw NumericError("paraphrase loss is not finite");
      loss_sum += value;
      g.backward(loss);
      if (++in_batch == cfg.batch_size) {
        adam.step(params);
        params.zero_grad();
        in_batch = 0;
      }
    }
    if (in_batch > 0) adam.step(params);
    params.zero_grad();
    if (!params.all_finite()) throw NumericError("paraphrase parameters diverged");
    report.epoch_loss.push_back(loss_sum / static_cast<double>(train_pairs.size()));
    if (cfg.verbose) {
      std::clog << "paraphrase epoch " << epoch + 1 << " loss " << report.epoch_loss.back() << '\n';
    }
  }
  if (!heldout_pairs.empty()) report.heldout_accuracy = paraphrase_accuracy(model, heldout_pairs);
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

ParaphraseWorld ParaphraseWorld::standard(std::uint64_t seed) {
  static const std::vector<std::string> nouns = {"capital",  "currency", "population",
                                                 "language", "leader",   "founder",
                                                 "climate",  "anthem"};
  static const std::vector<std::string> frames = {"what is the {n} of {e}", "{e} has which {n}",
                                                  "tell me the {n} of {e}",
                                                  "which {n} does {e} have"};
  ParaphraseWorld w;
  std::vector<std::string> avoid = nouns;
  for (const auto& f : frames) {
    for (const auto& t : tokenize(f)) avoid.push_back(t);
  }
  for (const auto& n : nouns) {
    std::vector<std::string> phrasings;
    for (std::string f : frames) phrasings.push_back(f.replace(f.find("{n}"), 3, n));
    w.relations.push_back(std::move(phrasings));
  }
  std::mt19937_64 rng(seed);
  w.entities = syllable_names(rng, 40, avoid);
  return w;
}

int cooccurrence(const TokenSequence& a, const TokenSequence& b) {
  const std::set<std::string> sa(a.begin(), a.end());
  const std::set<std::string> sb(b.begin(), b.end());
  int shared = 0;
  for (const auto& t : sa) shared += static_cast<int>(sb.count(t));
  return shared;
}

int hardest_negative(std::size_t query, const std::vector<TokenSequence>& pool,
                     const std::vector<int>& meaning) {
  int best = -1;
  int best_count = -1;
  for (std::size_t j = 0; j < pool.size(); ++j) {
    if (meaning[j] == meaning[query]) continue;
    const int c = cooccurrence(pool[query], pool[j]);
    if (c > best_count) {
      best_count = c;
      best = static_cast<int>(j);
    }
  }
  return best;
}

namespace {

std::string fill(std::string phrasing, const std::string& entity) {
  return phrasing.replace(phrasing.find("{e}"), 3, entity);
}

}  // namespace

std::vector<ParaphrasePair> generate_corpus(const ParaphraseWorld& world, std::uint64_t seed,
                                            int n_pairs) {
  if (n_pairs < 2) throw std::invalid_argument("generate_corpus: need at least 2 pairs");
  const int n_pos = (n_pairs + 1) / 2;
  const int n_neg = n_pairs - n_pos;
  std::mt19937_64 rng(seed);
  std::vector<ParaphrasePair> out;
  std::vector<TokenSequence> pool;
  std::vector<int> meaning;
  const auto n_ent = static_cast<int>(world.entities.size());
  for (int i = 0; i < n_pos; ++i) {
    const std::size_t r = draw_index(rng, world.relations.size());
    const std::size_t e = draw_index(rng, world.entities.size());
    const auto& ph = world.relations[r];
    // The identity rewrite is allowed so an exact repeat reads as a paraphrase.
    const std::size_t x = draw_index(rng, ph.size());
    const std::size_t y = draw_index(rng, ph.size());
    ParaphrasePair p{tokenize(fill(ph[x], world.entities[e])),
                     tokenize(fill(ph[y], world.entities[e])), true};
    pool.push_back(p.a);
    pool.push_back(p.b);
    const int id = static_cast<int>(r) * n_ent + static_cast<int>(e);
    meaning.push_back(id);
    meaning.push_back(id);
    out.push_back(std::move(p));
  }
  for (int i = 0; i < n_neg; ++i) {
    // Clamp the first question and swap the second for its closest
    // non-paraphrase.
    const std::size_t first = 2 * static_cast<std::size_t>(i);
    const int j = hardest_negative(first + 1, pool, meaning);
    if (j < 0) throw std::invalid_argument("generate_corpus: world has a single meaning");
    out.push_back({pool[first], pool[static_cast<std::size_t>(j)], false});
  }
  return out;
}

std::vector<ParaphrasePair> generate_synthetic_corpus(std::uint64_t seed, int n_pairs) {
  return generate_corpus(ParaphraseWorld::standard(seed), seed, n_pairs);
}

void save_paraphrase_corpus(const std::filesystem::path& path,
                            const std::vector<ParaphrasePair>& pairs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& p : pairs) {
    out << (p.positive ? 1 : 0) << '\t' << join_tokens(p.a) << '\t' << join_tokens(p.b) << '\n';
  }
}

std::vector<ParaphrasePair> load_paraphrase_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<ParaphrasePair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '\t')) fields.push_back(f);
    if (fields.size() != 3) throw ParseError(lineno, "expected 3 tab-separated fields");
    if (fields[0] != "0" && fields[0] != "1") throw ParseError(lineno, "label must be 0 or 1");
    ParaphrasePair p{tokenize(fields[1]), tokenize(fields[2]), fields[0] == "1"};
    if (p.a.empty() || p.b.empty()) throw ParseError(lineno, "empty question");
    pairs.push_back(std::move(p));
  }
  return pairs;
}

}  // namespace kbmrc
