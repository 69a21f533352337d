#include "kbmrc/synth.hpp"

#include <stdexcept>

#include "kbmrc/text.hpp"

namespace kbmrc {

std::vector<std::string> syllable_names(std::mt19937_64& rng, int count,
                                        const std::vector<std::string>& avoid) {
  static const std::string consonants = "bdfgklmnprstvz";
  static const std::string vowels = "aeiou";
  std::vector<std::string> names;
  int attempts = 0;
  while (static_cast<int>(names.size()) < count) {
    if (++attempts > 200000) throw std::runtime_error("syllable_names: name space exhausted");
    const int syllables = 2 + static_cast<int>(draw_index(rng, 2));
    std::string name;
    for (int s = 0; s < syllables; ++s) {
      name += consonants[draw_index(rng, consonants.size())];
      name += vowels[draw_index(rng, vowels.size())];
    }
    bool ok = true;
    for (const auto& other : names) ok = ok && edit_distance(name, other) >= 2;
    for (const auto& word : avoid) ok = ok && edit_distance(name, word) >= 2;
    if (ok) names.push_back(std::move(name));
  }
  return names;
}

}  // namespace kbmrc
