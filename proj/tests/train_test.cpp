#include <omp.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "bfamr/error.hpp"
#include "bfamr/train.hpp"
#include "doctest.h"
#include "test_models.hpp"

using namespace bfamr;
namespace fs = std::filesystem;

namespace {

std::vector<CorpusExample> subset(int n) {
  auto all = testdata::toy_corpus();
  all.resize(static_cast<std::size_t>(n));
  return all;
}

TrainConfig quick_config() {
  TrainConfig c;
  c.batch_size = 3;
  c.epochs = 3;
  c.warmup = 5;
  c.eval_every = 0;
  return c;
}

}  // namespace

TEST_CASE("learning-rate schedule") {
  // Values of scale * d^-0.5 * min(step^-0.5, step * warmup^-1.5).
  CHECK(lr_schedule(1, 400, 512) == doctest::Approx(5.524271728019903e-06).epsilon(1e-12));
  CHECK(lr_schedule(400, 400, 512) == doctest::Approx(0.002209708691207961).epsilon(1e-12));
  CHECK(lr_schedule(1600, 400, 512) == doctest::Approx(0.0011048543456039806).epsilon(1e-12));
  CHECK(lr_schedule(100, 400, 64, 2.0) == doctest::Approx(0.003125).epsilon(1e-12));
  CHECK(lr_schedule(399, 400, 512) < lr_schedule(400, 400, 512));
  CHECK(lr_schedule(401, 400, 512) < lr_schedule(400, 400, 512));
  CHECK_THROWS_AS(lr_schedule(0, 400, 512), UserError);
}

TEST_CASE("train config validation") {
  TrainConfig c;
  c.validate();
  CHECK(c.deterministic_prob == 0.5);
  CHECK(c.clip_norm == 1.0);
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), UserError);
  c = TrainConfig{};
  c.deterministic_prob = 1.5;
  CHECK_THROWS_AS(c.validate(), UserError);
  auto model = testdata::tiny_model();
  CHECK_THROWS_AS(train(*model, {}, {}, TrainConfig{}), UserError);
}

TEST_CASE("example loss draws the order mode") {
  auto model = testdata::tiny_model();
  const CorpusExample ex = testdata::toy_corpus()[0];
  const auto det = linearize(ex.graph, model->vocab(), OrderMode::Deterministic);
  Tape t1, t2;
  std::mt19937_64 rng(4);
  const ExampleLoss a = example_loss(*model, t1, ex, rng, 1.0);
  const ExampleLoss b = sequence_loss(*model, t2, ex.sentence, det);
  CHECK(a.steps == static_cast<int>(det.size()));
  CHECK(a.loss.scalar() == b.loss.scalar());
  CHECK_THROWS_AS(sequence_loss(*model, t2, ex.sentence, {}), UserError);
}

TEST_CASE("training is deterministic across runs and thread counts") {
  const auto data = subset(7);
  std::vector<double> reference;
  for (int threads : {1, 3, 1}) {
    omp_set_num_threads(threads);
    auto model = testdata::tiny_model(12);
    const TrainResult r = train(*model, data, {}, quick_config());
    if (reference.empty()) reference = r.epoch_losses;
    CHECK(r.epoch_losses == reference);
  }
  omp_set_num_threads(1);
}

TEST_CASE("training lowers the loss and records metrics") {
  const auto data = subset(6);
  auto model = testdata::tiny_model(13);
  TrainConfig c = quick_config();
  c.epochs = 12;
  c.deterministic_prob = 1.0;
  c.warmup = 10;
  c.lr_scale = 2.0;
  c.eval_every = 6;
  const fs::path dir = fs::temp_directory_path() / "bfamr_train_test";
  fs::remove_all(dir);
  c.checkpoint_dir = dir / "ckpt";
  c.metrics_path = dir / "metrics.csv";
  fs::create_directories(dir);
  std::vector<EpochReport> reports;
  const TrainResult r = train(*model, data, subset(2), c, [&](const EpochReport& e) {
    reports.push_back(e);
  });
  REQUIRE(r.epoch_losses.size() == 12);
  CHECK(r.epoch_losses.back() < 0.7 * r.epoch_losses.front());
  CHECK(r.steps == 12 * 2);
  CHECK(r.metrics.size() == 24);
  CHECK(r.metrics[0].lr == doctest::Approx(lr_schedule(1, 10, 8, 2.0)));
  REQUIRE(reports.size() == 12);
  CHECK_FALSE(reports[0].dev_smatch.has_value());
  REQUIRE(reports[5].dev_smatch.has_value());
  CHECK(*reports[5].dev_smatch >= 0.0);
  CHECK(*reports[5].dev_smatch <= 1.0);
  CHECK(r.best_dev_smatch.has_value());
  CHECK(fs::exists(dir / "ckpt" / "best" / "manifest.json"));
  CHECK(fs::exists(dir / "ckpt" / "last" / "manifest.json"));

  std::ifstream csv(c.metrics_path);
  std::string header, line;
  std::getline(csv, header);
  CHECK(header == "step,lr,train_loss,dev_smatch");
  int rows = 0, with_dev = 0;
  while (std::getline(csv, line)) {
    ++rows;
    with_dev += line.back() != ',';
  }
  CHECK(rows == 24);
  CHECK(with_dev == 2);
}

TEST_CASE("evaluate scores parses against gold") {
  auto model = testdata::tiny_model(14);
  DecodeOptions o;
  o.beam = 1;
  const SmatchScore s = evaluate(*model, subset(3), o);
  CHECK(s.gold_total > 0);
  CHECK(s.f1() >= 0.0);
  CHECK(s.f1() <= 1.0);
}
