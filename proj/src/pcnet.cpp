#include "kbmrc/pcnet.hpp"

#include <random>
#include <set>

#include <json.hpp>

namespace kbmrc {

PcNet::PcNet(Vocabulary vocab, const PcNetConfig& config, std::uint64_t seed)
    : QaModel(std::move(vocab)), config_(config) {
  const int d = config.embedding_dim;
  const int h = config.hidden_dim;
  emb_ = nn::EmbeddingTable::create(params_, "pcnet.emb", vocab_.size(), d);
  q_fwd_ = nn::GruParams::create(params_, "pcnet.q_fwd", d, h);
  q_bwd_ = nn::GruParams::create(params_, "pcnet.q_bwd", d, h);
  path_gru_ = nn::GruParams::create(params_, "pcnet.elem", d, 2 * h);
  if (!config.share_element_encoder) ctx_gru_ = nn::GruParams::create(params_, "pcnet.ctx", d, 2 * h);
  std::mt19937_64 rng(seed);
  params_.init_uniform(rng, -config.init_scale, config.init_scale);
  emb_.zero_padding_row();
}

std::vector<Candidate> PcNet::candidates(const Instance& inst) const {
  const auto anchors = detect_anchors(inst.question_tokens, inst.kb);
  std::vector<Candidate> out;
  for (auto& path : enumerate_candidates(anchors, inst.kb, config_.max_hops)) {
    Candidate c{path.terminal, inst.kb.argument_text(path.terminal), std::nullopt};
    c.path = std::move(path);
    out.push_back(std::move(c));
  }
  return out;
}

nn::Var PcNet::question_vector(nn::Graph& g, const TokenSequence& question) const {
  const auto ids = vocab_.encode(question);
  return nn::encode_bidirectional(g, q_fwd_, q_bwd_, emb_, ids);
}

ElementEncoder PcNet::path_encoder(nn::Graph& g) const {
  return ElementEncoder(g, path_gru_, emb_, vocab_, index_.get(), &retrieval_);
}

ElementEncoder PcNet::context_encoder(nn::Graph& g) const {
  return ElementEncoder(g, share() ? path_gru_ : ctx_gru_, emb_, vocab_, index_.get(), &retrieval_);
}

nn::Var PcNet::encode_path(ElementEncoder& enc, const CandidatePath& path,
                           const DocumentKB& kb) const {
  std::vector<nn::Var> parts;
  for (const Element* e : path.elements(kb)) parts.push_back(enc.encode_enhanced(*e));
  return enc.graph().mean(parts);
}

std::vector<const Element*> context_neighbors(Occurrence terminal, const DocumentKB& kb) {
  const std::string text = kb.argument_text(terminal);
  std::set<int> facts;
  for (const auto occ : kb.argument_index().at(text)) facts.insert(occ.fact);
  std::vector<const Element*> out;
  for (const int f : facts) {
    const Fact& fact = kb.facts()[static_cast<std::size_t>(f)];
    if (fact.subject.text() != text) out.push_back(&fact.subject);
    out.push_back(&fact.predicate);
    for (const auto& o : fact.objects) {
      if (o.text() != text) out.push_back(&o);
    }
  }
  return out;
}

nn::Var PcNet::encode_context(ElementEncoder& enc, Occurrence terminal,
                              const DocumentKB& kb) const {
  std::vector<nn::Var> parts;
  for (const Element* e : context_neighbors(terminal, kb)) parts.push_back(enc.encode_enhanced(*e));
  return mean_or_zero(enc.graph(), parts, 2 * config_.hidden_dim);
}

nn::Var mean_or_zero(nn::Graph& g, std::span<const nn::Var> parts, int dim) {
  if (parts.empty()) return g.zeros(dim);
  return g.mean(parts);
}

nn::Var PcNet::score_one(nn::Graph& g, nn::Var v_q, nn::Var v_p, nn::Var v_c) const {
  return g.add(g.dot(v_q, v_p), g.dot(v_q, v_c));
}

std::vector<nn::Var> PcNet::score(nn::Graph& g, const Instance& inst,
                                  std::span<const Candidate> cands) const {
  std::vector<nn::Var> out;
  if (cands.empty()) return out;
  const nn::Var v_q = question_vector(g, inst.question_tokens);
  ElementEncoder path_enc = path_encoder(g);
  std::optional<ElementEncoder> ctx_own;
  if (!share()) ctx_own.emplace(context_encoder(g));
  ElementEncoder& ctx_enc = share() ? path_enc : *ctx_own;
  for (const auto& c : cands) {
    const nn::Var v_p = encode_path(path_enc, c.path.value(), inst.kb);
    const nn::Var v_c = encode_context(ctx_enc, c.occurrence, inst.kb);
    out.push_back(score_one(g, v_q, v_p, v_c));
  }
  return out;
}

std::string PcNet::metadata() const {
  nlohmann::json j = {{"model", kind()},
                      {"embedding_dim", config_.embedding_dim},
                      {"hidden_dim", config_.hidden_dim},
                      {"share_element_encoder", config_.share_element_encoder},
                      {"max_hops", config_.max_hops},
                      {"vocab", vocab_.tokens()}};
  return j.dump();
}

}  // namespace kbmrc
