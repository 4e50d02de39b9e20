#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bfamr/decode.hpp"
#include "bfamr/model.hpp"
#include "bfamr/smatch.hpp"

namespace bfamr {

struct TrainConfig {
  int batch_size = 8;
  int epochs = 100;
  int warmup = 400;
  double lr_scale = 1.0;
  std::uint64_t seed = 1;
  // Probability of the deterministic child order for an example.
  double deterministic_prob = 0.5;
  double clip_norm = 1.0;
  // Dev Smatch every this many epochs (0 disables evaluation).
  int eval_every = 1;
  int dev_beam = 1;
  int smatch_restarts = 4;
  // Empty paths disable the corresponding output.
  std::filesystem::path checkpoint_dir;
  std::filesystem::path metrics_path;

  void validate() const;
};

// lr = scale * d^-0.5 * min(step^-0.5, step * warmup^-1.5), step >= 1.
double lr_schedule(int step, int warmup, int model_dim, double scale = 1.0);

struct ExampleLoss {
  Var loss;
  int steps = 0;
};

// Sum of step losses over a freshly linearized gold sequence; the order mode
// is drawn from rng. dropout_rng == nullptr turns dropout off.
ExampleLoss example_loss(const Model& model, Tape& tape, const CorpusExample& example,
                         std::mt19937_64& rng, double deterministic_prob = 0.5,
                         std::mt19937_64* dropout_rng = nullptr);
// Loss for a fixed linearization.
ExampleLoss sequence_loss(const Model& model, Tape& tape, const AnnotatedSentence& sentence,
                          const std::vector<StepRecord>& steps,
                          std::mt19937_64* dropout_rng = nullptr);

struct MetricRow {
  int step = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  std::optional<double> dev_smatch;
};

struct EpochReport {
  int epoch = 0;
  int step = 0;
  double mean_loss = 0.0;
  std::optional<double> dev_smatch;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<MetricRow> metrics;
  std::vector<double> epoch_losses;
  std::optional<double> best_dev_smatch;
  int steps = 0;
};

using EpochCallback = std::function<void(const EpochReport&)>;

// Mini-batch Adam training. Per-example losses run in parallel, each on its
// own tape; gradients are merged in example order so runs are reproducible.
// The batch gradient is the summed loss divided by the summed step count.
TrainResult train(Model& model, const std::vector<CorpusExample>& train_set,
                  const std::vector<CorpusExample>& dev_set, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Corpus Smatch of model parses against the gold graphs.
SmatchScore evaluate(const Model& model, const std::vector<CorpusExample>& examples,
                     const DecodeOptions& options, int restarts = 4, std::uint64_t seed = 0);

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows);

}  // namespace bfamr
