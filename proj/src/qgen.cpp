#include "kbmrc/qgen.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "kbmrc/errors.hpp"
#include "kbmrc/nn/optimizer.hpp"
#include "kbmrc/paraphrase.hpp"

namespace kbmrc {

double Generation::normalized() const {
  return length > 0 ? log_prob / static_cast<double>(length) : log_prob;
}

QgModel::QgModel(Vocabulary source_vocab, Vocabulary target_vocab, const QgConfig& config,
                 std::uint64_t seed)
    : src_vocab_(std::move(source_vocab)), tgt_vocab_(std::move(target_vocab)), config_(config) {
  if (!tgt_vocab_.contains(kBos) || !tgt_vocab_.contains(kEos)) {
    throw std::invalid_argument("target vocabulary needs <s> and </s>");
  }
  const int d = config.embedding_dim;
  const int h = config.hidden_dim;
  src_emb_ = nn::EmbeddingTable::create(params_, "qg.src_emb", src_vocab_.size(), d);
  tgt_emb_ = nn::EmbeddingTable::create(params_, "qg.tgt_emb", tgt_vocab_.size(), d);
  word_gru_ = nn::GruParams::create(params_, "qg.word", d, h);
  fact_gru_ = nn::GruParams::create(params_, "qg.fact", h, h);
  dec_gru_ = nn::GruParams::create(params_, "qg.dec", d, h);
  att_gru_ = nn::GruParams::create(params_, "qg.att", h, h);
  w_g_ = &params_.add("qg.w_g", d, 2 * h);
  w_c_ = &params_.add("qg.w_c", h, h);
  w_e_ = &params_.add("qg.w_e", h, h);
  std::mt19937_64 rng(seed);
  params_.init_uniform(rng, -config.init_scale, config.init_scale);
  src_emb_.zero_padding_row();
  tgt_emb_.zero_padding_row();
}

std::vector<nn::Var> QgModel::enhanced_word_states(nn::Graph& g, const Element& e,
                                                   const nn::SequenceEncoding& words) const {
  if (!index_ || index_->empty() || e.role == Role::kPredicate) return words.states;
  const auto links = enhancement_links(e, *index_, retrieval_);
  if (links.empty()) return words.states;
  auto encode_final = [&](const Element& x) {
    const auto ids = src_vocab_.encode(x.tokens);
    return nn::encode_sequence(g, word_gru_, src_emb_, ids).final();
  };
  std::vector<nn::Var> parts;
  for (const auto& link : links) {
    const std::vector<nn::Var> pair{encode_final(*link.predicate), encode_final(*link.argument)};
    parts.push_back(g.mean(pair));
  }
  const nn::Var shift = g.matvec(*w_e_, g.sum(parts));
  std::vector<nn::Var> out;
  out.reserve(words.states.size());
  for (const auto s : words.states) out.push_back(g.add(s, shift));
  return out;
}

HierEncoding QgModel::encode(nn::Graph& g, std::span<const Element> source) const {
  if (source.empty()) throw std::invalid_argument("QG: empty source path");
  HierEncoding enc;
  std::vector<nn::Var> element_finals;
  for (const auto& e : source) {
    const auto ids = src_vocab_.encode(e.tokens);
    const auto words = nn::encode_sequence(g, word_gru_, src_emb_, ids);
    auto states = enhanced_word_states(g, e, words);
    element_finals.push_back(states.back());
    for (std::size_t k = 0; k < states.size(); ++k) {
      enc.source_tokens.push_back(e.tokens[k]);
      enc.source_states.push_back(states[k]);
    }
    enc.word_states.push_back(std::move(states));
  }
  enc.fact_states =
      nn::encode_inputs(g, fact_gru_, element_finals, g.zeros(config_.hidden_dim)).states;
  enc.final = enc.fact_states.back();
  return enc;
}

DecodeStep QgModel::step(nn::Graph& g, const HierEncoding& enc, nn::Var previous_hidden,
                         const std::string& previous_word) const {
  DecodeStep s;
  const nn::Var x = tgt_emb_.lookup(g, tgt_vocab_.id(previous_word));
  s.hidden = nn::gru_step(g, dec_gru_, x, previous_hidden);

  std::vector<nn::Var> fact_logits;
  for (const auto f : enc.fact_states) fact_logits.push_back(g.dot(previous_hidden, f));
  s.alpha = g.softmax(g.concat(fact_logits));
  s.c_fct = nn::gru_step(g, att_gru_, g.weighted_sum(s.alpha, enc.fact_states), s.hidden);

  const auto& a = g.value(s.alpha);
  s.focus = static_cast<int>(std::max_element(a.data(), a.data() + a.size()) - a.data());
  // Word attention spans every source position, keeping the step smooth in
  // the parameters.
  std::vector<nn::Var> word_logits;
  for (const auto w : enc.source_states) word_logits.push_back(g.dot(s.c_fct, w));
  s.beta = g.softmax(g.concat(word_logits));
  s.c_wrd = g.weighted_sum(s.beta, enc.source_states);

  const nn::Var gen = g.matvec(*tgt_emb_.table, g.matvec(*w_g_, g.concat({s.hidden, s.c_wrd})));
  if (!config_.copy) {
    s.log_probs = g.log_softmax(gen);
    return s;
  }
  std::vector<nn::Var> logits{gen};
  for (const auto w : enc.source_states) {
    logits.push_back(g.dot(s.c_wrd, g.tanh(g.matvec(*w_c_, w))));
  }
  s.log_probs = g.log_softmax(g.concat(logits));
  return s;
}

nn::Var QgModel::word_log_prob(nn::Graph& g, const HierEncoding& enc, nn::Var joint,
                               const std::string& word) const {
  std::vector<int> idx;
  if (tgt_vocab_.contains(word)) idx.push_back(tgt_vocab_.id(word));
  if (config_.copy) {
    for (std::size_t k = 0; k < enc.source_tokens.size(); ++k) {
      if (enc.source_tokens[k] == word) idx.push_back(tgt_vocab_.size() + static_cast<int>(k));
    }
  }
  if (idx.empty()) idx.push_back(Vocabulary::kUnk);
  return g.log_sum_exp_at(joint, idx);
}

std::vector<std::pair<std::string, double>> QgModel::word_distribution(
    nn::Graph& g, const HierEncoding& enc, nn::Var joint) const {
  const auto& lp = g.value(joint);
  std::vector<std::pair<std::string, double>> out;
  for (int i = 0; i < tgt_vocab_.size(); ++i) out.emplace_back(tgt_vocab_.token(i), std::exp(lp(i)));
  if (!config_.copy) return out;
  std::map<std::string, std::size_t> extra;
  for (std::size_t k = 0; k < enc.source_tokens.size(); ++k) {
    const double p = std::exp(lp(tgt_vocab_.size() + static_cast<Eigen::Index>(k)));
    const auto& w = enc.source_tokens[k];
    if (tgt_vocab_.contains(w)) {
      out[static_cast<std::size_t>(tgt_vocab_.id(w))].second += p;
    } else if (auto it = extra.find(w); it != extra.end()) {
      out[it->second].second += p;
    } else {
      extra.emplace(w, out.size());
      out.emplace_back(w, p);
    }
  }
  return out;
}

nn::Var QgModel::sequence_loss(nn::Graph& g, std::span<const Element> source,
                               const TokenSequence& target) const {
  const HierEncoding enc = encode(g, source);
  nn::Var h = enc.final;
  std::string prev = kBos;
  std::vector<nn::Var> terms;
  for (std::size_t t = 0; t <= target.size(); ++t) {
    const std::string& word = t < target.size() ? target[t] : std::string(kEos);
    const DecodeStep s = step(g, enc, h, prev);
    terms.push_back(word_log_prob(g, enc, s.log_probs, word));
    h = s.hidden;
    prev = word;
  }
  return g.scale(g.sum(terms), -1.0);
}

double QgModel::sequence_log_prob(std::span<const Element> source,
                                  const TokenSequence& target) const {
  nn::Graph g;
  return -g.scalar(sequence_loss(g, source, target));
}

namespace {

bool emittable(const std::string& w) {
  return w != Vocabulary::kPadToken && w != Vocabulary::kUnkToken && w != kBos;
}

struct Hypothesis {
  TokenSequence tokens;
  double log_prob = 0;
  nn::Var hidden;
  std::string last;
};

}  // namespace

Generation QgModel::greedy(std::span<const Element> source, int max_len) const {
  nn::Graph g;
  const HierEncoding enc = encode(g, source);
  Generation out;
  nn::Var h = enc.final;
  std::string prev = kBos;
  while (out.length < max_len) {
    const DecodeStep s = step(g, enc, h, prev);
    const auto dist = word_distribution(g, enc, s.log_probs);
    std::size_t best = dist.size();
    for (std::size_t i = 0; i < dist.size(); ++i) {
      if (emittable(dist[i].first) && (best == dist.size() || dist[i].second > dist[best].second)) {
        best = i;
      }
    }
    out.log_prob += std::log(dist[best].second);
    ++out.length;
    if (dist[best].first == kEos) {
      out.finished = true;
      break;
    }
    out.tokens.push_back(dist[best].first);
    h = s.hidden;
    prev = dist[best].first;
  }
  return out;
}

Generation QgModel::beam_search(std::span<const Element> source, int beam_width,
                                int max_len) const {
  if (beam_width < 1 || max_len < 1) throw std::invalid_argument("beam_width and max_len must be >= 1");
  nn::Graph g;
  const HierEncoding enc = encode(g, source);
  std::vector<Hypothesis> live{{{}, 0.0, enc.final, kBos}};
  std::vector<Generation> done;

  for (int len = 1; len <= max_len && !live.empty() &&
                    static_cast<int>(done.size()) < beam_width;
       ++len) {
    struct Expansion {
      std::size_t hyp;
      std::string word;
      double log_prob;
      nn::Var hidden;
    };
    std::vector<Expansion> expansions;
    for (std::size_t i = 0; i < live.size(); ++i) {
      const DecodeStep s = step(g, enc, live[i].hidden, live[i].last);
      for (const auto& [w, p] : word_distribution(g, enc, s.log_probs)) {
        if (emittable(w)) expansions.push_back({i, w, live[i].log_prob + std::log(p), s.hidden});
      }
    }
    std::stable_sort(expansions.begin(), expansions.end(),
                     [](const Expansion& a, const Expansion& b) { return a.log_prob > b.log_prob; });
    const std::size_t keep =
        std::min<std::size_t>(expansions.size(), static_cast<std::size_t>(beam_width) - done.size());
    std::vector<Hypothesis> next;
    for (std::size_t k = 0; k < keep; ++k) {
      const auto& x = expansions[k];
      if (x.word == kEos) {
        done.push_back({live[x.hyp].tokens, x.log_prob, true, len});
        continue;
      }
      Hypothesis h{live[x.hyp].tokens, x.log_prob, x.hidden, x.word};
      h.tokens.push_back(x.word);
      if (len == max_len) done.push_back({h.tokens, h.log_prob, false, len});
      else next.push_back(std::move(h));
    }
    live = std::move(next);
  }
  const auto best = std::max_element(done.begin(), done.end(), [](const auto& a, const auto& b) {
    return a.normalized() < b.normalized();
  });
  return *best;
}

std::string QgModel::metadata() const {
  nlohmann::json j = {{"model", "qgnet"},
                      {"embedding_dim", config_.embedding_dim},
                      {"hidden_dim", config_.hidden_dim},
                      {"copy", config_.copy},
                      {"source_vocab", src_vocab_.tokens()},
                      {"target_vocab", tgt_vocab_.tokens()}};
  return j.dump();
}

std::vector<Element> qg_source(const Instance& inst, const Candidate& cand) {
  std::vector<Element> out;
  if (cand.path) {
    for (const Element* e : cand.path->elements(inst.kb)) out.push_back(*e);
    return out;
  }
  const Fact& f = inst.kb.facts().at(static_cast<std::size_t>(cand.occurrence.fact));
  const int other = cand.occurrence.slot == 0 ? 1 : 0;
  out.push_back(f.argument(other));
  out.push_back(f.predicate);
  out.push_back(f.argument(cand.occurrence.slot));
  return out;
}

std::vector<QgExample> qg_examples(const std::vector<Instance>& instances) {
  std::vector<QgExample> out;
  for (const auto& inst : instances) {
    const auto cands = all_argument_candidates(inst);
    const int gold = gold_index(inst, cands);
    if (gold < 0) continue;
    out.push_back({qg_source(inst, cands[static_cast<std::size_t>(gold)]), inst.question_tokens});
  }
  return out;
}

Vocabulary build_qg_source_vocabulary(const std::vector<QgExample>& examples) {
  std::vector<TokenSequence> corpus;
  for (const auto& ex : examples) {
    for (const auto& e : ex.source) corpus.push_back(e.tokens);
  }
  return Vocabulary::build(corpus);
}

Vocabulary build_qg_target_vocabulary(const std::vector<QgExample>& examples, int min_count) {
  std::vector<TokenSequence> corpus;
  for (const auto& ex : examples) corpus.push_back(ex.target);
  return Vocabulary::build(corpus, min_count, {kBos, kEos});
}

double qg_bleu(const QgModel& model, const std::vector<QgExample>& examples) {
  if (examples.empty()) return 0.0;
  std::vector<TokenSequence> hyps, refs;
  for (const auto& ex : examples) {
    hyps.push_back(model.generate(ex.source).tokens);
    refs.push_back(ex.target);
  }
  return bleu(hyps, refs);
}

QgReport train_qg(QgModel& model, const std::vector<QgExample>& train_set,
                  const std::vector<QgExample>& dev_set) {
  if (train_set.empty()) throw UsageError("no QG training examples");
  const auto& cfg = model.config();
  const auto started = std::chrono::steady_clock::now();
  std::mt19937_64 rng(cfg.seed);
  nn::Adam adam({.learning_rate = cfg.learning_rate, .clip_norm = 5.0});
  auto& params = model.parameters();
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  QgReport report;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    double symbols = 0;
    int in_batch = 0;
    params.zero_grad();
    for (const std::size_t i : order) {
      const auto& ex = train_set[i];
      nn::Graph g;
      const nn::Var loss = model.sequence_loss(g, ex.source, ex.target);
      const double value = g.scalar(loss);
      if (!std::isfinite(value)) throw NumericError("QG loss is not finite");
      loss_sum += value;
      symbols += static_cast<double>(ex.target.size() + 1);
      g.backward(loss);
      if (++in_batch == cfg.batch_size) {
        adam.step(params);
        params.zero_grad();
        in_batch = 0;
      }
    }
    if (in_batch > 0) adam.step(params);
    params.zero_grad();
    if (!params.all_finite()) throw NumericError("QG parameters diverged");
    report.epoch_loss.push_back(loss_sum / symbols);
    if (cfg.verbose) std::clog << "qg epoch " << epoch + 1 << " loss " << report.epoch_loss.back() << '\n';
  }
  report.dev_bleu = qg_bleu(model, dev_set);
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

double qg_score(const TokenSequence& question, std::span<const Element> source,
                const QgModel& qg, const ParaphraseModel& para, Generation* generated) {
  Generation gen = qg.generate(source);
  const double score = gen.tokens.empty() || question.empty() ? 0.0 : para.score(question, gen.tokens);
  if (generated != nullptr) *generated = std::move(gen);
  return score;
}

}  // namespace kbmrc
