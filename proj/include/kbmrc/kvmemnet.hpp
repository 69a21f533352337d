#pragma once

// Key-value memory network scorer. Each fact (s, p, o) contributes the slots
// (s + p -> o) and (o + p -> s). Starting from the question vector, every hop
// addresses the keys with a softmax over dot products, reads the weighted sum
// of values and updates the query as R (q + v_o). After n hops the query is
// dotted with each candidate's value encoding.

#include <cstdint>
#include <iosfwd>

#include "kbmrc/element_encoder.hpp"
#include "kbmrc/qa_model.hpp"

namespace kbmrc {

enum class SlotDirection { kForward, kBackward };

struct MemorySlot {
  const Element* key_argument = nullptr;
  const Element* key_predicate = nullptr;
  const Element* value = nullptr;
  int fact = 0;        // index of the source fact
  int object = 0;      // object index within the fact
  SlotDirection direction = SlotDirection::kForward;
};

/// Two slots per (fact, object), ordered by (fact, object, direction).
std::vector<MemorySlot> build_memory(const DocumentKB& kb);

struct KvMemNetConfig {
  int embedding_dim = 64;
  /// Element GRU size h; keys are 2h and so is the question vector.
  int hidden_dim = 64;
  int hops = 2;
  /// Uniform range for GRU weights and the projections.
  double init_scale = 0.2;
  /// Uniform range for word embeddings. Unit scale keeps element encodings
  /// large enough that entity identity shows in the addressing logits.
  double embedding_init_scale = 1.0;
  /// Start R at the identity instead of the uniform draw.
  bool identity_hop_init = true;
  /// Start the value projection at [I; 0], so a read value lands in the
  /// argument half of the query and can address the next hop by identity.
  bool identity_value_init = true;
};

/// Addressing weights of one inference, one vector per hop.
struct AttentionTrace {
  std::vector<std::vector<double>> alphas;
};

class KvMemNet : public QaModel {
 public:
  /// Throws std::invalid_argument unless 1 <= hops <= 3.
  KvMemNet(Vocabulary vocab, const KvMemNetConfig& config, std::uint64_t seed);

  std::string kind() const override { return "kvmemnet"; }
  /// Every distinct argument of the document.
  std::vector<Candidate> candidates(const Instance& inst) const override;
  std::vector<nn::Var> score(nn::Graph& g, const Instance& inst,
                             std::span<const Candidate> cands) const override;
  std::string metadata() const override;

  /// As score(), also recording the per-hop addressing weights.
  std::vector<nn::Var> score_traced(nn::Graph& g, const Instance& inst,
                                    std::span<const Candidate> cands, AttentionTrace* trace) const;

  const KvMemNetConfig& config() const { return config_; }

  nn::Var question_vector(nn::Graph& g, const TokenSequence& question) const;
  ElementEncoder element_encoder(nn::Graph& g) const;
  nn::Var key_vector(ElementEncoder& enc, const MemorySlot& slot) const;
  /// Projection of an element encoding into the 2h query space.
  nn::Var value_vector(ElementEncoder& enc, const Element& e) const;

  /// softmax_i(q . key_i). Throws std::invalid_argument with no keys.
  nn::Var address(nn::Graph& g, nn::Var query, std::span<const nn::Var> keys) const;
  /// sum_i alpha_i value_i. Throws std::invalid_argument on a length mismatch.
  nn::Var read(nn::Graph& g, nn::Var alpha, std::span<const nn::Var> values) const;
  /// R (q + o).
  nn::Var hop_update(nn::Graph& g, nn::Var query, nn::Var output) const;

  nn::Parameter& hop_matrix() { return *hop_r_; }
  nn::Parameter& value_projection() { return *value_proj_; }
  nn::EmbeddingTable& embedding() { return emb_; }

 private:
  KvMemNetConfig config_;
  nn::EmbeddingTable emb_;
  nn::GruParams q_fwd_, q_bwd_, elem_gru_;
  nn::Parameter* hop_r_ = nullptr;
  nn::Parameter* value_proj_ = nullptr;
};

/// One JSON record per (hop, slot): {"instance", "hop", "slot", "key", "value", "alpha"}.
void write_attention_trace(std::ostream& out, const std::string& instance_id,
                           const std::vector<MemorySlot>& slots, const AttentionTrace& trace);

}  // namespace kbmrc
