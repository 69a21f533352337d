#pragma once

// Path-and-context scorer: f_qa = v_q . v_p + v_q . v_c, where v_q is the
// bidirectional question encoding, v_p the mean encoding of the anchor path
// elements and v_c the mean encoding of the candidate's neighbors.

#include <cstdint>

#include "kbmrc/element_encoder.hpp"
#include "kbmrc/qa_model.hpp"

namespace kbmrc {

struct PcNetConfig {
  int embedding_dim = 64;
  /// Per-direction question GRU size; element encodings use twice this so
  /// they live in the same space as v_q.
  int hidden_dim = 64;
  /// One element GRU for path and context; false gives each its own.
  bool share_element_encoder = true;
  int max_hops = 2;
  double init_scale = 0.08;
};

class PcNet : public QaModel {
 public:
  PcNet(Vocabulary vocab, const PcNetConfig& config, std::uint64_t seed);

  std::string kind() const override { return "pcnet"; }
  /// Anchor paths of up to max_hops facts; answers off every path are absent.
  std::vector<Candidate> candidates(const Instance& inst) const override;
  std::vector<nn::Var> score(nn::Graph& g, const Instance& inst,
                             std::span<const Candidate> cands) const override;
  std::string metadata() const override;

  const PcNetConfig& config() const { return config_; }

  nn::Var question_vector(nn::Graph& g, const TokenSequence& question) const;
  nn::Var encode_path(ElementEncoder& enc, const CandidatePath& path, const DocumentKB& kb) const;
  /// Mean over every argument and predicate of facts containing the terminal's
  /// text, other than the terminal text itself; zero when there is none.
  nn::Var encode_context(ElementEncoder& enc, Occurrence terminal, const DocumentKB& kb) const;
  nn::Var score_one(nn::Graph& g, nn::Var v_q, nn::Var v_p, nn::Var v_c) const;

  ElementEncoder path_encoder(nn::Graph& g) const;
  ElementEncoder context_encoder(nn::Graph& g) const;

  nn::EmbeddingTable& embedding() { return emb_; }
  nn::GruParams& question_forward() { return q_fwd_; }
  nn::GruParams& question_backward() { return q_bwd_; }
  nn::GruParams& path_gru() { return path_gru_; }
  nn::GruParams& context_gru() { return share() ? path_gru_ : ctx_gru_; }

 private:
  bool share() const { return config_.share_element_encoder; }

  PcNetConfig config_;
  nn::EmbeddingTable emb_;
  nn::GruParams q_fwd_, q_bwd_, path_gru_, ctx_gru_;
};

/// Mean of `parts`, or the zero vector of size `dim` when there are none.
nn::Var mean_or_zero(nn::Graph& g, std::span<const nn::Var> parts, int dim);

/// The shared neighbor rule behind PCNet's context vector.
std::vector<const Element*> context_neighbors(Occurrence terminal, const DocumentKB& kb);

}  // namespace kbmrc
