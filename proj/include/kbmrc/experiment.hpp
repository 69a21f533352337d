#pragma once

// End-to-end runs driven by a flat `key = value` config: train the selected
// pipeline, evaluate it and write report, checkpoints and dumps.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "kbmrc/fusion.hpp"
#include "kbmrc/kvmemnet.hpp"
#include "kbmrc/paraphrase.hpp"
#include "kbmrc/pcnet.hpp"
#include "kbmrc/qgen.hpp"
#include "kbmrc/ranker.hpp"

namespace kbmrc {

struct ExperimentConfig {
  std::string model = "kvmemnet";  // pcnet | kvmemnet | qgnet | fused
  std::string kb = "none";         // none or an external KB slot
  std::filesystem::path kb_dir;    // holds <slot>.jsonl
  std::filesystem::path train_path;
  std::filesystem::path dev_path;
  std::filesystem::path test_path;  // optional
  std::filesystem::path paraphrase_train;
  std::filesystem::path paraphrase_heldout;  // optional
  std::filesystem::path output_dir = "run";

  TrainConfig train;
  int embedding_dim = 64;
  int hidden_dim = 64;
  int hops = 2;
  int max_hops = 2;
  bool share_element_encoder = true;
  bool identity_hop_init = true;
  bool identity_value_init = true;
  double kv_init_scale = KvMemNetConfig{}.init_scale;
  double kv_embedding_init_scale = KvMemNetConfig{}.embedding_init_scale;
  std::string fusion_base = "kvmemnet";
  bool lambda_grid = false;
  bool trace = false;

  QgConfig qg;
  ParaphraseConfig paraphrase;

  /// Sets one key; throws UsageError for unknown keys or malformed values.
  void set(const std::string& key, const std::string& value);
  /// Lines are `key = value`; blank lines and lines starting with # are skipped.
  static ExperimentConfig from_file(const std::filesystem::path& path);
  static ExperimentConfig from_string(const std::string& text);
  nlohmann::json to_json() const;
  /// Checks value ranges, model/KB combinations and that every input file
  /// exists. Throws UsageError or DataError.
  void validate() const;
};

std::unique_ptr<QaModel> make_qa_model(const std::string& kind, Vocabulary vocab,
                                       const ExperimentConfig& config);
/// Rebuilds a PCNet or KVMemNet from checkpoint metadata and parameters.
std::unique_ptr<QaModel> load_qa_model(const std::filesystem::path& checkpoint);
std::unique_ptr<QgModel> load_qg_model(const std::filesystem::path& checkpoint);
std::unique_ptr<ParaphraseModel> load_paraphrase_model(const std::filesystem::path& checkpoint);

/// Line-delimited prediction records; a pure function of its inputs.
std::string prediction_dump(const std::vector<Instance>& instances,
                            const std::vector<Prediction>& predictions);

std::shared_ptr<const FactIndex> load_fact_index(const ExperimentConfig& config);

/// Runs the configured pipeline and returns the report that is also written
/// to output_dir/report.json.
nlohmann::json run_experiment(const ExperimentConfig& config);

}  // namespace kbmrc
