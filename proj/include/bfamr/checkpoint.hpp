#pragma once

// Checkpoint directory layout:
//   manifest.json  format version, dtype, and per-tensor name/shape/offset
//   tensors.bin    raw little-endian payloads in manifest order
//   config.txt     model configuration (key = value)
//   vocab.json     vocabulary

#include <filesystem>
#include <string>
#include <vector>

#include "bfamr/kv.hpp"
#include "bfamr/nn.hpp"
#include "bfamr/vocab.hpp"

namespace bfamr {

inline constexpr int kCheckpointFormatVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor value;
};

struct Checkpoint {
  KeyValues config;
  Vocabulary vocab;
  std::vector<NamedTensor> tensors;
};

void save_checkpoint(const std::filesystem::path& dir, const ParamStore& params,
                     const KeyValues& config, const Vocabulary& vocab);
// Throws IoError for a missing directory or file, UserError for a malformed
// or incompatible manifest.
Checkpoint load_checkpoint(const std::filesystem::path& dir);
// Copies checkpoint tensors into same-named parameters; every parameter must
// be present with a matching shape.
void restore_parameters(ParamStore& params, const std::vector<NamedTensor>& tensors);

}  // namespace bfamr
