#include "kbmrc/candidates.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "kbmrc/execution.hpp"

namespace kbmrc {

int anchor_score(const TokenSequence& argument, const TokenSequence& question) {
  int score = 0;
  for (const auto& a : argument) {
    for (const auto& q : question) score += fuzzy_indicator(a, q);
  }
  return score;
}

std::vector<AnchorMatch> detect_anchors(const TokenSequence& question, const DocumentKB& kb) {
  std::vector<AnchorMatch> anchors;
  if (question.empty()) return anchors;
  for (const auto occ : kb.argument_occurrences()) {
    const int score = anchor_score(kb.argument(occ).tokens, question);
    if (score >= 1) anchors.push_back({occ, score});
  }
  std::stable_sort(anchors.begin(), anchors.end(), [](const AnchorMatch& a, const AnchorMatch& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.occurrence < b.occurrence;
  });
  return anchors;
}

std::vector<const Element*> CandidatePath::elements(const DocumentKB& kb) const {
  std::vector<const Element*> out;
  const auto& facts = kb.facts();
  const auto& first = hops.at(0);
  out.push_back(&facts[first.fact].argument(first.entry_slot));
  for (std::size_t h = 0; h < hops.size(); ++h) {
    const auto& hop = hops[h];
    out.push_back(&facts[hop.fact].predicate);
    out.push_back(&facts[hop.fact].argument(hop.exit_slot));
  }
  return out;
}

namespace {

// Lexicographic key used to pick one path per terminal.
using PathKey = std::vector<int>;

PathKey path_key(const CandidatePath& p) {
  PathKey key{p.num_hops(), p.anchor.occurrence.fact, p.anchor.occurrence.slot};
  for (const auto& h : p.hops) {
    key.push_back(h.fact);
    key.push_back(h.entry_slot);
    key.push_back(h.exit_slot);
  }
  return key;
}

}  // namespace

std::vector<CandidatePath> enumerate_candidates(const std::vector<AnchorMatch>& anchors,
                                                const DocumentKB& kb, int max_hops) {
  if (max_hops != 1 && max_hops != 2) throw std::invalid_argument("max_hops must be 1 or 2");
  const auto& facts = kb.facts();
  const auto& index = kb.argument_index();

  std::map<Occurrence, std::pair<PathKey, CandidatePath>> best;
  auto offer = [&](CandidatePath&& path) {
    if (path.terminal == path.anchor.occurrence) return;
    PathKey key = path_key(path);
    auto it = best.find(path.terminal);
    if (it == best.end()) {
      best.emplace(path.terminal, std::make_pair(std::move(key), std::move(path)));
    } else if (key < it->second.first) {
      it->second = {std::move(key), std::move(path)};
    }
  };

  for (const auto& anchor : anchors) {
    auto entries = index.find(kb.argument_text(anchor.occurrence));
    if (entries == index.end()) continue;
    for (const auto entry : entries->second) {
      const Fact& f = facts[entry.fact];
      for (int exit = 0; exit < f.num_arguments(); ++exit) {
        if (exit == entry.slot) continue;
        const PathHop first{entry.fact, entry.slot, exit};
        offer(CandidatePath{anchor, {first}, {entry.fact, exit}});
        if (max_hops < 2) continue;

        auto bridges = index.find(f.argument(exit).text());
        for (const auto bridge : bridges->second) {
          if (bridge.fact == entry.fact) continue;
          const Fact& g = facts[bridge.fact];
          for (int exit2 = 0; exit2 < g.num_arguments(); ++exit2) {
            if (exit2 == bridge.slot) continue;
            offer(CandidatePath{anchor, {first, {bridge.fact, bridge.slot, exit2}},
                                {bridge.fact, exit2}});
          }
        }
      }
    }
  }

  std::vector<CandidatePath> out;
  out.reserve(best.size());
  for (auto& [occ, entry] : best) out.push_back(std::move(entry.second));
  return out;
}

bool is_valid_path(const CandidatePath& path, const DocumentKB& kb) {
  if (path.hops.empty() || path.hops.size() > 2) return false;
  if (!kb.contains(path.anchor.occurrence) || !kb.contains(path.terminal)) return false;
  if (path.terminal == path.anchor.occurrence) return false;
  std::string linked = kb.argument_text(path.anchor.occurrence);
  int prev_fact = -1;
  for (const auto& hop : path.hops) {
    if (!kb.contains({hop.fact, hop.entry_slot}) || !kb.contains({hop.fact, hop.exit_slot})) {
      return false;
    }
    if (hop.fact == prev_fact || hop.entry_slot == hop.exit_slot) return false;
    if (kb.argument_text({hop.fact, hop.entry_slot}) != linked) return false;
    linked = kb.argument_text({hop.fact, hop.exit_slot});
    prev_fact = hop.fact;
  }
  const auto& last = path.hops.back();
  return path.terminal == Occurrence{last.fact, last.exit_slot};
}

namespace {

bool reaches_answer(const Instance& inst, const std::vector<CandidatePath>& cands) {
  const std::string gold = inst.answer_text();
  return std::any_of(cands.begin(), cands.end(), [&](const CandidatePath& c) {
    return inst.kb.argument_text(c.terminal) == gold;
  });
}

}  // namespace

CoverageReport coverage_report(const std::vector<Instance>& instances, Execution exec) {
  if (instances.empty()) throw std::invalid_argument("coverage_report: empty instance list");
  const auto n = static_cast<long>(instances.size());
  long hit1 = 0, hit2 = 0;
  auto visit = [&](long i, long& h1, long& h2) {
    const auto& inst = instances[static_cast<std::size_t>(i)];
    const auto anchors = detect_anchors(inst.question_tokens, inst.kb);
    if (reaches_answer(inst, enumerate_candidates(anchors, inst.kb, 1))) ++h1;
    if (reaches_answer(inst, enumerate_candidates(anchors, inst.kb, 2))) ++h2;
  };
  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic, 8) reduction(+ : hit1, hit2)
    for (long i = 0; i < n; ++i) visit(i, hit1, hit2);
  } else {
    for (long i = 0; i < n; ++i) visit(i, hit1, hit2);
  }
  CoverageReport r;
  r.num_instances = instances.size();
  r.coverage_1hop = static_cast<double>(hit1) / static_cast<double>(n);
  r.coverage_2hop = static_cast<double>(hit2) / static_cast<double>(n);
  return r;
}

std::string to_string(const CoverageReport& r) {
  std::ostringstream os;
  os << "instances=" << r.num_instances << " coverage_1hop=" << r.coverage_1hop
     << " coverage_2hop=" << r.coverage_2hop;
  return os.str();
}

}  // namespace kbmrc
