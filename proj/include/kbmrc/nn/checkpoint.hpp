#pragma once

// Binary checkpoint layout (little-endian):
//   char[8]  magic "KBMRCCKP"
//   u32      format version (kCheckpointVersion)
//   u64      metadata length, then that many bytes of UTF-8 JSON
//   u32      parameter count
//   per parameter: u32 name length, name bytes, u64 rows, u64 cols,
//                  rows*cols f64 values in row-major order

#include <filesystem>
#include <string>
#include <vector>

#include "kbmrc/nn/parameters.hpp"

namespace kbmrc::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string metadata;
  std::vector<std::pair<std::string, Matrix>> tensors;
};

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params,
                     const std::string& metadata);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies every tensor into the same-named parameter. Missing names or shape
/// mismatches throw DataError.
void restore_parameters(const Checkpoint& ckpt, ParameterSet& params);

}  // namespace kbmrc::nn
