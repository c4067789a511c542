#include <benchmark/benchmark.h>

#include "fluorosil/dimred.hpp"
#include "fluorosil/ensemble.hpp"
#include "fluorosil/pipeline.hpp"
#include "fluorosil/rng.hpp"
#include "fluorosil/synthetic.hpp"

namespace {

using namespace fluorosil;

const Dataset& canonical_dataset() {
  static const Dataset ds = synthesize_dataset(SynthConfig::defaults());
  return ds;
}

void BM_SynthesizeDataset(benchmark::State& state) {
  const SynthConfig cfg = SynthConfig::defaults();
  for (auto _ : state) {
    benchmark::DoNotOptimize(synthesize_dataset(cfg));
  }
}
BENCHMARK(BM_SynthesizeDataset);

void BM_Normalize160(benchmark::State& state) {
  const Dataset& ds = canonical_dataset();
  for (auto _ : state) {
    benchmark::DoNotOptimize(normalize(ds));
  }
}
BENCHMARK(BM_Normalize160);

void BM_MeanScale(benchmark::State& state) {
  const FeatureMatrix fm = normalize(canonical_dataset());
  for (auto _ : state) {
    benchmark::DoNotOptimize(mean_scale(fm));
  }
}
BENCHMARK(BM_MeanScale);

void BM_FitPca(benchmark::State& state) {
  const FeatureMatrix fm = normalize(canonical_dataset());
  const auto k = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_pca(fm, k));
  }
}
BENCHMARK(BM_FitPca)->Arg(3)->Arg(10);

void BM_Kmeans(benchmark::State& state) {
  const FeatureMatrix fm =
      select_columns(normalize(canonical_dataset()), algo1_reduced_pairs());
  for (auto _ : state) {
    benchmark::DoNotOptimize(kmeans(fm, 10, 42));
  }
}
BENCHMARK(BM_Kmeans);

void BM_RbfForward(benchmark::State& state) {
  Rng rng(7);
  RbfNetwork net;
  for (int c = 0; c < 10; ++c) {
    std::vector<double> center(26);
    for (auto& v : center) v = rng.uniform();
    net.centers.push_back(std::move(center));
    net.widths.push_back(0.5 + rng.uniform());
  }
  net.output_weights = Matrix(2, 10);
  for (auto& v : net.output_weights.data()) v = rng.uniform(-1.0, 1.0);
  std::vector<double> x(26);
  for (auto& v : x) v = rng.uniform();
  for (auto _ : state) {
    benchmark::DoNotOptimize(rbf_forward(net, x));
  }
}
BENCHMARK(BM_RbfForward);

void BM_MlpForward(benchmark::State& state) {
  Rng rng(8);
  MlpNetwork net;
  net.input_to_hidden = Matrix(10, 26);
  net.hidden_to_output = Matrix(2, 10);
  for (auto& v : net.input_to_hidden.data()) v = rng.uniform(-1.0, 1.0);
  for (auto& v : net.hidden_to_output.data()) v = rng.uniform(-1.0, 1.0);
  std::vector<double> x(26);
  for (auto& v : x) v = rng.uniform();
  for (auto _ : state) {
    benchmark::DoNotOptimize(mlp_forward(net, x));
  }
}
BENCHMARK(BM_MlpForward);

void BM_CombineMedian20(benchmark::State& state) {
  Rng rng(9);
  std::vector<std::vector<double>> pool(20, std::vector<double>(2));
  for (auto& o : pool) {
    o[0] = rng.uniform();
    o[1] = rng.uniform();
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(combine_median(pool));
  }
}
BENCHMARK(BM_CombineMedian20);

void BM_TrainFrozenRbfMember(benchmark::State& state) {
  const Dataset& ds = canonical_dataset();
  const FeatureMatrix all = build_one_step_features(ds);
  const FeatureMatrix train = filter_rows(
      all, [](Histology h) { return h != Histology::Inflammation; });
  const auto targets = sil_targets(train);
  const auto ids = trim_class_ids(train);

  TrainConfig cfg;
  cfg.learning_rate = 0.03;
  cfg.max_epochs = 4000;
  cfg.stop_patience = 30;
  cfg.min_relative_improvement = 1e-6;
  cfg.cost = CostPolicy::make(2.5, 1.0, 0.5);
  cfg.seed = 1000;

  for (auto _ : state) {
    RbfInitPolicy init;
    init.kind = RbfInitPolicy::Kind::kmeans_on_trimmed;
    init.kernel_count = 10;
    init.kernels_trainable = false;
    init.init_points = trim_training_set(train, ids, cfg.seed);
    benchmark::DoNotOptimize(train_rbf(cfg, train, targets, init));
  }
}
BENCHMARK(BM_TrainFrozenRbfMember)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
