#pragma once

// Helpers for synthetic corpora: pronounceable entity names that are far apart
// in edit distance, so fuzzy anchor matching never confuses two of them.

#include <random>
#include <string>
#include <vector>

namespace kbmrc {

/// `count` distinct lowercase names built from 2-3 consonant-vowel syllables.
/// Every name is at edit distance >= 2 from every other name and from every
/// word in `avoid`.
std::vector<std::string> syllable_names(std::mt19937_64& rng, int count,
                                        const std::vector<std::string>& avoid = {});

/// Uniform index in [0, n) drawn directly from the engine so sequences are
/// identical across standard library implementations.
inline std::size_t draw_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % n);
}

}  // namespace kbmrc
