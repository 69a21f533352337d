#include "kbmrc/kvmemnet.hpp"

#include <ostream>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace kbmrc {

std::vector<MemorySlot> build_memory(const DocumentKB& kb) {
  std::vector<MemorySlot> slots;
  const auto& facts = kb.facts();
  for (int f = 0; f < static_cast<int>(facts.size()); ++f) {
    const Fact& fact = facts[static_cast<std::size_t>(f)];
    for (int o = 0; o < static_cast<int>(fact.objects.size()); ++o) {
      const Element& obj = fact.objects[static_cast<std::size_t>(o)];
      slots.push_back({&fact.subject, &fact.predicate, &obj, f, o, SlotDirection::kForward});
      slots.push_back({&obj, &fact.predicate, &fact.subject, f, o, SlotDirection::kBackward});
    }
  }
  return slots;
}

KvMemNet::KvMemNet(Vocabulary vocab, const KvMemNetConfig& config, std::uint64_t seed)
    : QaModel(std::move(vocab)), config_(config) {
  if (config.hops < 1 || config.hops > 3) throw std::invalid_argument("hops must be in [1, 3]");
  const int d = config.embedding_dim;
  const int h = config.hidden_dim;
  emb_ = nn::EmbeddingTable::create(params_, "kv.emb", vocab_.size(), d);
  q_fwd_ = nn::GruParams::create(params_, "kv.q_fwd", d, h);
  q_bwd_ = nn::GruParams::create(params_, "kv.q_bwd", d, h);
  elem_gru_ = nn::GruParams::create(params_, "kv.elem", d, h);
  hop_r_ = &params_.add("kv.R", 2 * h, 2 * h);
  value_proj_ = &params_.add("kv.value_proj", 2 * h, h);
  std::mt19937_64 rng(seed);
  params_.init_uniform(rng, -config.init_scale, config.init_scale);
  std::uniform_real_distribution<double> emb_init(-config.embedding_init_scale,
                                                  config.embedding_init_scale);
  auto& table = emb_.table->value;
  for (Eigen::Index j = 0; j < table.cols(); ++j) {
    for (Eigen::Index i = 0; i < table.rows(); ++i) table(i, j) = emb_init(rng);
  }
  emb_.zero_padding_row();
  if (config.identity_hop_init) hop_r_->value.setIdentity();
  if (config.identity_value_init) {
    value_proj_->value.setZero();
    value_proj_->value.topRows(h).setIdentity();
  }
}

std::vector<Candidate> KvMemNet::candidates(const Instance& inst) const {
  return all_argument_candidates(inst);
}

nn::Var KvMemNet::question_vector(nn::Graph& g, const TokenSequence& question) const {
  const auto ids = vocab_.encode(question);
  return nn::encode_bidirectional(g, q_fwd_, q_bwd_, emb_, ids);
}

ElementEncoder KvMemNet::element_encoder(nn::Graph& g) const {
  return ElementEncoder(g, elem_gru_, emb_, vocab_, index_.get(), &retrieval_);
}

nn::Var KvMemNet::key_vector(ElementEncoder& enc, const MemorySlot& slot) const {
  return enc.graph().concat({enc.encode_enhanced(*slot.key_argument),
                             enc.encode_enhanced(*slot.key_predicate)});
}

nn::Var KvMemNet::value_vector(ElementEncoder& enc, const Element& e) const {
  return enc.graph().matvec(*value_proj_, enc.encode_enhanced(e));
}

nn::Var KvMemNet::address(nn::Graph& g, nn::Var query, std::span<const nn::Var> keys) const {
  if (keys.empty()) throw std::invalid_argument("address: empty memory");
  std::vector<nn::Var> logits;
  logits.reserve(keys.size());
  for (const auto k : keys) logits.push_back(g.dot(query, k));
  return g.softmax(g.concat(logits));
}

nn::Var KvMemNet::read(nn::Graph& g, nn::Var alpha, std::span<const nn::Var> values) const {
  if (g.dim(alpha) != static_cast<Eigen::Index>(values.size())) {
    throw std::invalid_argument("read: addressing/value length mismatch");
  }
  return g.weighted_sum(alpha, values);
}

nn::Var KvMemNet::hop_update(nn::Graph& g, nn::Var query, nn::Var output) const {
  return g.matvec(*hop_r_, g.add(query, output));
}

std::vector<nn::Var> KvMemNet::score_traced(nn::Graph& g, const Instance& inst,
                                            std::span<const Candidate> cands,
                                            AttentionTrace* trace) const {
  const auto slots = build_memory(inst.kb);
  if (slots.empty()) throw std::invalid_argument("KvMemNet::score: empty memory");
  ElementEncoder enc = element_encoder(g);
  std::vector<nn::Var> keys, values;
  keys.reserve(slots.size());
  values.reserve(slots.size());
  for (const auto& s : slots) {
    keys.push_back(key_vector(enc, s));
    values.push_back(value_vector(enc, *s.value));
  }

  nn::Var q = question_vector(g, inst.question_tokens);
  for (int hop = 0; hop < config_.hops; ++hop) {
    const nn::Var alpha = address(g, q, keys);
    if (trace != nullptr) {
      const auto& a = g.value(alpha);
      trace->alphas.emplace_back(a.data(), a.data() + a.size());
    }
    q = hop_update(g, q, read(g, alpha, values));
  }

  std::vector<nn::Var> out;
  out.reserve(cands.size());
  for (const auto& c : cands) {
    out.push_back(g.dot(q, value_vector(enc, inst.kb.argument(c.occurrence))));
  }
  return out;
}

std::vector<nn::Var> KvMemNet::score(nn::Graph& g, const Instance& inst,
                                     std::span<const Candidate> cands) const {
  return score_traced(g, inst, cands, nullptr);
}

std::string KvMemNet::metadata() const {
  nlohmann::json j = {{"model", kind()},
                      {"embedding_dim", config_.embedding_dim},
                      {"hidden_dim", config_.hidden_dim},
                      {"hops", config_.hops},
                      {"vocab", vocab_.tokens()}};
  return j.dump();
}

void write_attention_trace(std::ostream& out, const std::string& instance_id,
                           const std::vector<MemorySlot>& slots, const AttentionTrace& trace) {
  for (std::size_t hop = 0; hop < trace.alphas.size(); ++hop) {
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const auto& s = slots[i];
      nlohmann::json j = {{"instance", instance_id},
                          {"hop", hop + 1},
                          {"slot", i},
                          {"key", s.key_argument->surface + " | " + s.key_predicate->surface},
                          {"value", s.value->surface},
                          {"alpha", trace.alphas[hop][i]}};
      out << j.dump() << '\n';
    }
  }
}

}  // namespace kbmrc
