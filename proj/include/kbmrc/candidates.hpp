#pragma once

#include <vector>

#include "kbmrc/execution.hpp"
#include "kbmrc/kb.hpp"

namespace kbmrc {

/// An argument occurrence that fuzzily matches the question.
struct AnchorMatch {
  Occurrence occurrence;
  int score = 0;  // sum over (argument word, question word) of the fuzzy indicator
};

/// One traversed fact: the slot it was entered through and the slot it left by.
struct PathHop {
  int fact = 0;
  int entry_slot = 0;
  int exit_slot = 0;
};

/// Anchor -> (fact) -> [bridge argument -> (fact)] -> terminal.
struct CandidatePath {
  AnchorMatch anchor;
  std::vector<PathHop> hops;  // 1 or 2
  Occurrence terminal;

  int num_hops() const { return static_cast<int>(hops.size()); }

  /// Anchor, predicate(s), bridge argument for 2 hops, terminal.
  std::vector<const Element*> elements(const DocumentKB& kb) const;
};

/// Score of one argument against a question: sum over word pairs of the
/// fuzzy indicator.
int anchor_score(const TokenSequence& argument, const TokenSequence& question);

/// Every argument occurrence with score >= 1, sorted by score descending and
/// then by document position.
std::vector<AnchorMatch> detect_anchors(const TokenSequence& question, const DocumentKB& kb);

/// Arguments reachable from any anchor through 1 (or up to 2) facts. Facts are
/// linked through arguments with equal normalized text. One path per terminal
/// occurrence is kept: fewest hops first, then the lexicographically smallest
/// (anchor, fact, slot, ...) sequence. Output is ordered by terminal occurrence.
std::vector<CandidatePath> enumerate_candidates(const std::vector<AnchorMatch>& anchors,
                                                const DocumentKB& kb, int max_hops);

/// Checks linkage through shared argument text and terminal != anchor.
bool is_valid_path(const CandidatePath& path, const DocumentKB& kb);

struct CoverageReport {
  double coverage_1hop = 0;
  double coverage_2hop = 0;
  std::size_t num_instances = 0;
};

/// Fraction of instances whose gold answer occurrence is a 1-hop (resp.
/// <=2-hop) candidate. Throws std::invalid_argument on an empty list.
CoverageReport coverage_report(const std::vector<Instance>& instances,
                               Execution exec = Execution::kParallel);

std::string to_string(const CoverageReport& r);

}  // namespace kbmrc
