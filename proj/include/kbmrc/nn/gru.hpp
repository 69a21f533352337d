#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "kbmrc/nn/graph.hpp"
#include "kbmrc/vocab.hpp"

namespace kbmrc::nn {

/// |V| x d lookup table. Row Vocabulary::kPad is kept at zero and never read.
struct EmbeddingTable {
  Parameter* table = nullptr;

  static EmbeddingTable create(ParameterSet& params, const std::string& name, int vocab_size,
                               int dim);
  int dim() const { return static_cast<int>(table->cols()); }
  int vocab_size() const { return static_cast<int>(table->rows()); }
  Var lookup(Graph& g, int id) const { return g.lookup(*table, id); }
  void zero_padding_row() const { table->value.row(Vocabulary::kPad).setZero(); }
};

/// Text file with `token v1 ... vd` per line. Rows of tokens in `vocab` are
/// overwritten; returns how many were. Lines with the wrong width are an error.
int load_embedding_file(const std::filesystem::path& path, const Vocabulary& vocab,
                        EmbeddingTable& emb);

/// z = s(Wz x + Uz h + bz), r = s(Wr x + Ur h + br),
/// n = tanh(Wn x + Un (r*h) + bn), h' = (1 - z)*n + z*h.
struct GruParams {
  Parameter* w_z = nullptr;
  Parameter* u_z = nullptr;
  Parameter* b_z = nullptr;
  Parameter* w_r = nullptr;
  Parameter* u_r = nullptr;
  Parameter* b_r = nullptr;
  Parameter* w_n = nullptr;
  Parameter* u_n = nullptr;
  Parameter* b_n = nullptr;
  int input_dim = 0;
  int hidden_dim = 0;

  static GruParams create(ParameterSet& params, const std::string& prefix, int input_dim,
                          int hidden_dim);
};

Var gru_step(Graph& g, const GruParams& p, Var x, Var h);

struct SequenceEncoding {
  std::vector<Var> states;  // one per input step, in processing order
  Var final() const { return states.back(); }
};

/// Runs the GRU from a zero state over embedded ids. Throws
/// std::invalid_argument on an empty sequence.
SequenceEncoding encode_sequence(Graph& g, const GruParams& p, const EmbeddingTable& emb,
                                 std::span<const int> ids, bool reverse = false);

/// Same recurrence over precomputed input vectors.
SequenceEncoding encode_inputs(Graph& g, const GruParams& p, std::span<const Var> inputs,
                               Var initial);

/// [forward final; backward final], 2h-dimensional.
Var encode_bidirectional(Graph& g, const GruParams& fwd, const GruParams& bwd,
                         const EmbeddingTable& emb, std::span<const int> ids);

}  // namespace kbmrc::nn
