#include "bfamr/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <numeric>

#include "bfamr/error.hpp"

namespace bfamr {

void TrainConfig::validate() const {
  if (batch_size < 1) throw UserError("batch_size must be at least 1");
  if (epochs < 1) throw UserError("epochs must be at least 1");
  if (warmup < 1) throw UserError("warmup must be at least 1");
  if (!(lr_scale > 0)) throw UserError("lr_scale must be positive");
  if (deterministic_prob < 0 || deterministic_prob > 1)
    throw UserError("deterministic_prob must be in [0, 1]");
  if (!(clip_norm > 0)) throw UserError("clip_norm must be positive");
  if (eval_every < 0) throw UserError("eval_every must be non-negative");
  if (dev_beam < 1) throw UserError("dev_beam must be at least 1");
  if (smatch_restarts < 1) throw UserError("smatch_restarts must be at least 1");
}

double lr_schedule(int step, int warmup, int model_dim, double scale) {
  if (step < 1) throw UserError("learning-rate step counts from 1");
  if (warmup < 1 || model_dim < 1) throw UserError("warmup and model_dim must be positive");
  const double s = step;
  return scale / std::sqrt(static_cast<double>(model_dim)) *
         std::min(1.0 / std::sqrt(s), s * std::pow(static_cast<double>(warmup), -1.5));
}

ExampleLoss sequence_loss(const Model& model, Tape& tape, const AnnotatedSentence& sentence,
                          const std::vector<StepRecord>& steps, std::mt19937_64* dropout_rng) {
  if (steps.empty()) throw UserError("empty action sequence");
  ForwardPass pass(model, tape, sentence, dropout_rng);
  DecoderState state = initial_state();
  std::vector<Var> terms;
  terms.reserve(steps.size());
  for (const auto& rec : steps) {
    terms.push_back(pass.step_loss(state, rec.gold));
    apply_in_place(state, rec.gold);
  }
  return {ag::add_n(terms), static_cast<int>(steps.size())};
}

ExampleLoss example_loss(const Model& model, Tape& tape, const CorpusExample& example,
                         std::mt19937_64& rng, double deterministic_prob,
                         std::mt19937_64* dropout_rng) {
  std::bernoulli_distribution coin(deterministic_prob);
  const OrderMode mode = coin(rng) ? OrderMode::Deterministic : OrderMode::Random;
  const std::uint64_t order_seed = rng();
  const auto steps = linearize(example.graph, model.vocab(), mode, order_seed);
  return sequence_loss(model, tape, example.sentence, steps, dropout_rng);
}

SmatchScore evaluate(const Model& model, const std::vector<CorpusExample>& examples,
                     const DecodeOptions& options, int restarts, std::uint64_t seed) {
  const int n = static_cast<int>(examples.size());
  std::vector<AmrGraph> pred(examples.size()), gold(examples.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      pred[static_cast<std::size_t>(i)] =
          parse(model, examples[static_cast<std::size_t>(i)].sentence, options).graph;
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
    gold[static_cast<std::size_t>(i)] = examples[static_cast<std::size_t>(i)].graph;
  }
  if (failure) std::rethrow_exception(failure);
  return corpus_smatch(pred, gold, restarts, seed);
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write metrics file " + path.string());
  out << "step,lr,train_loss,dev_smatch\n";
  out << std::setprecision(10);
  for (const auto& r : rows) {
    out << r.step << ',' << r.lr << ',' << r.train_loss << ',';
    if (r.dev_smatch) out << *r.dev_smatch;
    out << '\n';
  }
  if (!out) throw IoError("failed writing metrics file " + path.string());
}

TrainResult train(Model& model, const std::vector<CorpusExample>& train_set,
                  const std::vector<CorpusExample>& dev_set, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty()) throw UserError("training corpus is empty");
  const bool use_dropout = model.config().dropout > 0.0;
  std::mt19937_64 rng(config.seed);
  std::vector<int> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  TrainResult result;
  ParamStore& params = model.params();
  const AdamConfig adam;
  DecodeOptions dev_options;
  dev_options.beam = config.dev_beam;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    long epoch_steps = 0;
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      const int count = static_cast<int>(end - begin);
      std::vector<std::uint64_t> order_seeds, dropout_seeds;
      for (int i = 0; i < count; ++i) {
        order_seeds.push_back(rng());
        dropout_seeds.push_back(rng());
      }
      std::vector<Gradients> grads(static_cast<std::size_t>(count));
      std::vector<double> losses(static_cast<std::size_t>(count), 0.0);
      std::vector<int> steps(static_cast<std::size_t>(count), 0);
      std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
      for (int i = 0; i < count; ++i) {
        try {
          const auto& ex = train_set[static_cast<std::size_t>(order[begin + static_cast<std::size_t>(i)])];
          std::mt19937_64 order_rng(order_seeds[static_cast<std::size_t>(i)]);
          std::mt19937_64 dropout_rng(dropout_seeds[static_cast<std::size_t>(i)]);
          Tape tape(true);
          ExampleLoss el = example_loss(model, tape, ex, order_rng, config.deterministic_prob,
                                        use_dropout ? &dropout_rng : nullptr);
          Gradients g = params.make_gradients();
          tape.backward(el.loss, g);
          grads[static_cast<std::size_t>(i)] = std::move(g);
          losses[static_cast<std::size_t>(i)] = static_cast<double>(el.loss.scalar());
          steps[static_cast<std::size_t>(i)] = el.steps;
        } catch (...) {
#pragma omp critical
          if (!failure) failure = std::current_exception();
        }
      }
      if (failure) std::rethrow_exception(failure);

      Gradients total = params.make_gradients();
      double batch_loss = 0.0;
      int batch_steps = 0;
      for (int i = 0; i < count; ++i) {
        accumulate_gradients(total, grads[static_cast<std::size_t>(i)]);
        batch_loss += losses[static_cast<std::size_t>(i)];
        batch_steps += steps[static_cast<std::size_t>(i)];
      }
      scale_gradients(total, Real(1) / static_cast<Real>(batch_steps));
      clip_grad_norm(total, static_cast<Real>(config.clip_norm));
      ++result.steps;
      const double lr = lr_schedule(result.steps, config.warmup, model.config().graph_hidden,
                                    config.lr_scale);
      adam_step(params, total, static_cast<Real>(lr), adam, result.steps);
      result.metrics.push_back({result.steps, lr, batch_loss / batch_steps, std::nullopt});
      epoch_loss += batch_loss;
      epoch_steps += batch_steps;
    }

    EpochReport report;
    report.epoch = epoch;
    report.step = result.steps;
    report.mean_loss = epoch_loss / static_cast<double>(epoch_steps);
    result.epoch_losses.push_back(report.mean_loss);
    if (config.eval_every > 0 && epoch % config.eval_every == 0 && !dev_set.empty()) {
      const double f1 = evaluate(model, dev_set, dev_options, config.smatch_restarts).f1();
      report.dev_smatch = f1;
      result.metrics.back().dev_smatch = f1;
      if (!result.best_dev_smatch || f1 > *result.best_dev_smatch) {
        result.best_dev_smatch = f1;
        if (!config.checkpoint_dir.empty()) model.save(config.checkpoint_dir / "best");
      }
    }
    report.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (on_epoch) on_epoch(report);
  }
  if (!config.checkpoint_dir.empty()) model.save(config.checkpoint_dir / "last");
  if (!config.metrics_path.empty()) write_metrics_csv(config.metrics_path, result.metrics);
  return result;
}

}  // namespace bfamr
