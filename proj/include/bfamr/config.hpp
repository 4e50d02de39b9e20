#pragma once

// Run configuration for the command-line tool: model and training settings
// plus corpus and output paths, read from a flat key-value file.

#include <filesystem>
#include <map>
#include <string>

#include "bfamr/kv.hpp"
#include "bfamr/model.hpp"
#include "bfamr/train.hpp"

namespace bfamr {

inline constexpr const char* kEnvPrefix = "BFAMR_";

struct RunConfig {
  ModelConfig model;
  TrainConfig train;  // train.seed also seeds parameter initialization
  std::filesystem::path train_corpus;
  std::filesystem::path dev_corpus;  // optional
  std::filesystem::path vocab;       // optional; built from train_corpus when empty
  std::filesystem::path out_dir;
  int min_freq = 1;

  // Keys are the ModelConfig keys plus batch_size, epochs, warmup, lr_scale,
  // seed, deterministic_prob, clip_norm, eval_every, dev_beam,
  // smatch_restarts, train_corpus, dev_corpus, vocab, out_dir and min_freq.
  // Unknown keys throw UserError.
  void apply(const KeyValues& kv);
  KeyValues to_kv() const;

  // Relative paths are taken relative to base.
  void resolve_paths(const std::filesystem::path& base);
  // Inputs must exist and out_dir must be creatable. Throws IoError.
  void validate_paths() const;
  void validate() const;

  std::filesystem::path checkpoint_dir() const { return out_dir / "checkpoints"; }
  std::filesystem::path metrics_path() const { return out_dir / "metrics.csv"; }
};

// BFAMR_GRAPH_HIDDEN=64 -> {"graph_hidden", "64"}. Every variable with the
// prefix is returned, so unknown names are rejected by RunConfig::apply.
KeyValues env_overrides(const std::map<std::string, std::string>& environment);
KeyValues process_env_overrides();

// File values, then environment overrides; paths resolved against the
// file's directory.
RunConfig load_run_config(const std::filesystem::path& path, const KeyValues& overrides);

}  // namespace bfamr
