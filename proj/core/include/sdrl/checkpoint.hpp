#pragma once

#include <filesystem>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "sdrl/nn.hpp"

namespace sdrl::nn {

// Binary layout, all integers little-endian:
//   magic "SDRLPAR1" (8 bytes), u32 version (=1), u32 tensor count
//   per tensor: u32 name length, name bytes, u64 rows, u64 cols
//   then per tensor, in the same order: rows*cols IEEE-754 binary64, row-major
// Hyperparameters go to a JSON sidecar at <path>.json.

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params,
                     const nlohmann::json& hyperparameters);

struct Checkpoint {
  ParameterSet params;
  nlohmann::json hyperparameters;
};

/// Throws CheckpointError on missing files or malformed content.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

}  // namespace sdrl::nn
