#include "kbmrc/nn/gru.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "kbmrc/errors.hpp"

namespace kbmrc::nn {

EmbeddingTable EmbeddingTable::create(ParameterSet& params, const std::string& name,
                                      int vocab_size, int dim) {
  return EmbeddingTable{&params.add(name, vocab_size, dim)};
}

int load_embedding_file(const std::filesystem::path& path, const Vocabulary& vocab,
                        EmbeddingTable& emb) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  int loaded = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string token;
    if (!(ls >> token)) continue;
    std::vector<double> values;
    double v;
    while (ls >> v) values.push_back(v);
    if (static_cast<int>(values.size()) != emb.dim()) {
      throw ParseError(lineno, "expected " + std::to_string(emb.dim()) + " values for \"" +
                                   token + "\", got " + std::to_string(values.size()));
    }
    if (!vocab.contains(token)) continue;
    const int row = vocab.id(token);
    if (row == Vocabulary::kPad) continue;
    for (int j = 0; j < emb.dim(); ++j) emb.table->value(row, j) = values[static_cast<std::size_t>(j)];
    ++loaded;
  }
  return loaded;
}

GruParams GruParams::create(ParameterSet& params, const std::string& prefix, int input_dim,
                            int hidden_dim) {
  GruParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.w_z = &params.add(prefix + ".w_z", hidden_dim, input_dim);
  p.u_z = &params.add(prefix + ".u_z", hidden_dim, hidden_dim);
  p.b_z = &params.add(prefix + ".b_z", hidden_dim, 1);
  p.w_r = &params.add(prefix + ".w_r", hidden_dim, input_dim);
  p.u_r = &params.add(prefix + ".u_r", hidden_dim, hidden_dim);
  p.b_r = &params.add(prefix + ".b_r", hidden_dim, 1);
  p.w_n = &params.add(prefix + ".w_n", hidden_dim, input_dim);
  p.u_n = &params.add(prefix + ".u_n", hidden_dim, hidden_dim);
  p.b_n = &params.add(prefix + ".b_n", hidden_dim, 1);
  return p;
}

Var gru_step(Graph& g, const GruParams& p, Var x, Var h) {
  const Var z = g.sigmoid(g.add(g.add(g.matvec(*p.w_z, x), g.matvec(*p.u_z, h)), g.bias(*p.b_z)));
  const Var r = g.sigmoid(g.add(g.add(g.matvec(*p.w_r, x), g.matvec(*p.u_r, h)), g.bias(*p.b_r)));
  const Var n = g.tanh(
      g.add(g.add(g.matvec(*p.w_n, x), g.matvec(*p.u_n, g.cmul(r, h))), g.bias(*p.b_n)));
  return g.add(g.cmul(g.one_minus(z), n), g.cmul(z, h));
}

SequenceEncoding encode_inputs(Graph& g, const GruParams& p, std::span<const Var> inputs,
                               Var initial) {
  if (inputs.empty()) throw std::invalid_argument("encode_sequence: empty sequence");
  SequenceEncoding enc;
  enc.states.reserve(inputs.size());
  Var h = initial;
  for (const Var x : inputs) {
    h = gru_step(g, p, x, h);
    enc.states.push_back(h);
  }
  return enc;
}

SequenceEncoding encode_sequence(Graph& g, const GruParams& p, const EmbeddingTable& emb,
                                 std::span<const int> ids, bool reverse) {
  if (ids.empty()) throw std::invalid_argument("encode_sequence: empty sequence");
  std::vector<Var> inputs;
  inputs.reserve(ids.size());
  if (reverse) {
    for (auto it = ids.rbegin(); it != ids.rend(); ++it) inputs.push_back(emb.lookup(g, *it));
  } else {
    for (const int id : ids) inputs.push_back(emb.lookup(g, id));
  }
  return encode_inputs(g, p, inputs, g.zeros(p.hidden_dim));
}

Var encode_bidirectional(Graph& g, const GruParams& fwd, const GruParams& bwd,
                         const EmbeddingTable& emb, std::span<const int> ids) {
  const Var f = encode_sequence(g, fwd, emb, ids, false).final();
  const Var b = encode_sequence(g, bwd, emb, ids, true).final();
  return g.concat({f, b});
}

}  // namespace kbmrc::nn
