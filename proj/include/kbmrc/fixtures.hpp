#pragma once

// Synthetic datasets small enough to train on in seconds, each built so one
// property of the models can be checked directionally:
//   separable  the question names the answer fact's subject and relation
//   chain      the answer is two facts away from the question entity
//   extkb      candidates differ only in what an external KB says about them
//   fusion     dev questions use phrasings the QA training data never shows
//   figure4    location questions plus the St. Johns example document

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kbmrc/kb.hpp"
#include "kbmrc/paraphrase.hpp"

namespace kbmrc {

struct Dataset {
  std::vector<Instance> train;
  std::vector<Instance> dev;
};

Fact make_fact(std::string id, const std::string& subject, const std::string& predicate,
               const std::vector<std::string>& objects);
/// Builds an instance whose answer is `answer` in the document.
Instance make_instance(std::string doc_id, std::string question, std::vector<Fact> facts,
                       Occurrence answer);

Dataset separable_fixture(std::uint64_t seed, int n_train = 500, int n_dev = 100);
Dataset chain_fixture(std::uint64_t seed, int n_train = 2000, int n_dev = 100);

struct ExternalKbFixture {
  Dataset data;
  ExternalKB kb;
};
ExternalKbFixture external_kb_fixture(std::uint64_t seed, int n_train = 400, int n_dev = 100);

struct FusionFixture {
  Dataset data;
  std::vector<ParaphrasePair> paraphrase_train;
  std::vector<ParaphrasePair> paraphrase_heldout;
};
FusionFixture fusion_fixture(std::uint64_t seed, int n_train = 300, int n_dev = 100);

/// "Where is st johns mi located?" over the document of the worked example.
Instance figure4_instance();
/// Location questions shaped like the worked example; dev is that example.
Dataset figure4_fixture(std::uint64_t seed, int n_train = 200);

/// Writes every fixture under `dir` (one subdirectory each) and returns the
/// files written.
std::vector<std::filesystem::path> write_fixtures(const std::filesystem::path& dir,
                                                  std::uint64_t seed);

}  // namespace kbmrc
