#include "kbmrc/qa_model.hpp"

#include <map>
#include <set>

namespace kbmrc {

std::vector<Candidate> all_argument_candidates(const Instance& inst) {
  const auto anchors = detect_anchors(inst.question_tokens, inst.kb);
  std::map<std::string, const CandidatePath*> shortest;
  const auto paths = enumerate_candidates(anchors, inst.kb, 2);
  for (const auto& p : paths) {
    const std::string text = inst.kb.argument_text(p.terminal);
    auto it = shortest.find(text);
    if (it == shortest.end() || p.num_hops() < it->second->num_hops()) shortest[text] = &p;
  }

  std::vector<Candidate> out;
  std::set<std::string> seen;
  for (const auto occ : inst.kb.argument_occurrences()) {
    std::string text = inst.kb.argument_text(occ);
    if (!seen.insert(text).second) continue;
    Candidate c{occ, text, std::nullopt};
    if (auto it = shortest.find(text); it != shortest.end()) c.path = *it->second;
    out.push_back(std::move(c));
  }
  return out;
}

int gold_index(const Instance& inst, std::span<const Candidate> cands) {
  const std::string gold = inst.answer_text();
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (cands[i].text == gold) return static_cast<int>(i);
  }
  return -1;
}

Vocabulary build_qa_vocabulary(const std::vector<Instance>& instances, const ExternalKB* external) {
  std::vector<TokenSequence> corpus;
  auto add_facts = [&](const std::vector<Fact>& facts) {
    for (const auto& f : facts) {
      corpus.push_back(f.subject.tokens);
      corpus.push_back(f.predicate.tokens);
      for (const auto& o : f.objects) corpus.push_back(o.tokens);
    }
  };
  for (const auto& inst : instances) {
    corpus.push_back(inst.question_tokens);
    add_facts(inst.kb.facts());
  }
  if (external != nullptr) add_facts(external->facts);
  return Vocabulary::build(corpus);
}

std::vector<double> QaModel::score_values(const Instance& inst,
                                          std::span<const Candidate> cands) const {
  nn::Graph g;
  const auto vars = score(g, inst, cands);
  std::vector<double> out;
  out.reserve(vars.size());
  for (const auto v : vars) out.push_back(g.scalar(v));
  return out;
}

}  // namespace kbmrc
