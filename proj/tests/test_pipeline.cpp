#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "fluorosil/errors.hpp"
#include "fluorosil/pipeline.hpp"

using namespace fluorosil;

namespace {

SynthConfig small_synth(std::uint64_t seed = 42) {
  SynthConfig cfg = SynthConfig::defaults();
  cfg.class_counts = {24, 8, 4, 8, 12};
  cfg.seed = seed;
  return cfg;
}

PipelineConfig small_run() {
  PipelineConfig cfg;
  cfg.pool_size = 3;
  cfg.repetitions = 2;
  cfg.base_seed = 100;
  cfg.train.learning_rate = 0.03;
  cfg.train.max_epochs = 400;
  cfg.train.stop_patience = 30;
  cfg.train.min_relative_improvement = 1e-6;
  cfg.train.cost = CostPolicy::make(2.5, 1.0, 0.5);
  return cfg;
}

Classification make_result(bool sil) { return {sil, sil ? 0.9 : 0.1}; }

}  // namespace

TEST_CASE("two-step cascade truth table with lazy second step") {
  for (const bool step1_sil : {false, true}) {
    for (const bool step2_sil : {false, true}) {
      int step1_calls = 0, step2_calls = 0;
      const auto verdict = two_step_classify(
          [&] {
            ++step1_calls;
            return make_result(step1_sil);
          },
          [&] {
            ++step2_calls;
            return make_result(step2_sil);
          });

      CHECK(step1_calls == 1);
      if (!step1_sil) {
        // non-SIL from step 1 terminates the cascade.
        CHECK(step2_calls == 0);
        CHECK_FALSE(verdict.sil);
      } else {
        CHECK(step2_calls == 1);
        CHECK(verdict.sil == step2_sil);
      }
    }
  }
}

TEST_CASE("one-step features concatenate the two reduced sets") {
  const Dataset ds = synthesize_dataset(small_synth());
  const FeatureMatrix fm = build_one_step_features(ds);

  REQUIRE(fm.cols() == 26);
  CHECK(fm.tag == PreprocessingTag::concatenated);
  CHECK(fm.rows() == ds.samples.size());

  std::size_t normalized = 0, mean_scaled = 0;
  for (const auto& label : fm.column_labels) {
    if (label.provenance == PreprocessingTag::normalized) ++normalized;
    if (label.provenance == PreprocessingTag::normalized_mean_scaled) {
      ++mean_scaled;
    }
  }
  CHECK(normalized == 13);
  CHECK(mean_scaled == 13);

  // First 13 columns are the algorithm-(1) pairs, second 13 the
  // algorithm-(2) pairs.
  for (std::size_t c = 0; c < 13; ++c) {
    CHECK(fm.column_labels[c].pair == algo1_reduced_pairs()[c]);
    CHECK(fm.column_labels[13 + c].pair == algo2_reduced_pairs()[c]);
  }

  // The two 13-sets differ exactly in the starred pairs.
  std::set<WavelengthPair> set1, set2;
  for (std::size_t c = 0; c < 13; ++c) {
    set1.insert(fm.column_labels[c].pair);
    set2.insert(fm.column_labels[13 + c].pair);
  }
  std::set<WavelengthPair> only1, only2;
  std::set_difference(set1.begin(), set1.end(), set2.begin(), set2.end(),
                      std::inserter(only1, only1.begin()));
  std::set_difference(set2.begin(), set2.end(), set1.begin(), set1.end(),
                      std::inserter(only2, only2.begin()));
  CHECK(only1 == std::set<WavelengthPair>{{380, 640}, {460, 640}});
  CHECK(only2 == std::set<WavelengthPair>{{380, 600}, {460, 660}});

  // Column 1 is bitwise the first reduced column of the normalized matrix.
  const FeatureMatrix direct =
      select_columns(normalize(ds), algo1_reduced_pairs());
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    CHECK(fm.at(r, 0) == direct.at(r, 0));
  }
}

TEST_CASE("trimming equalizes class counts at the minority count") {
  SynthConfig synth = SynthConfig::defaults();  // 94 NS / 13 NC / 58 SIL
  const Dataset ds = synthesize_dataset(synth);
  const FeatureMatrix all = build_one_step_features(ds);
  const FeatureMatrix train = filter_rows(
      all, [](Histology h) { return h != Histology::Inflammation; });
  REQUIRE(train.rows() == 165);

  const auto ids = trim_class_ids(train);
  const FeatureMatrix trimmed = trim_training_set(train, ids, 7);
  CHECK(trimmed.rows() == 39);

  std::map<int, std::size_t> counts;
  for (std::size_t r = 0; r < trimmed.rows(); ++r) {
    const Histology h = trimmed.row_keys[r].histology;
    counts[is_sil(h) ? 2 : (h == Histology::NormalSquamous ? 0 : 1)] += 1;
  }
  CHECK(counts[0] == 13);
  CHECK(counts[1] == 13);
  CHECK(counts[2] == 13);

  // Deterministic per seed.
  CHECK(trim_training_set(train, ids, 7) == trimmed);
  CHECK_FALSE(trim_training_set(train, ids, 8) == trimmed);

  // Already balanced input keeps its counts.
  const auto ids2 = trim_class_ids(trimmed);
  const FeatureMatrix again = trim_training_set(trimmed, ids2, 3);
  CHECK(again.rows() == 39);

  CHECK_THROWS_AS(trim_class_ids(all), ValidationError);  // inflammation rows
}

TEST_CASE("constituent specs enforce their preprocessing pairing") {
  CHECK_NOTHROW(ConstituentSpec::algo1().validate());
  CHECK_NOTHROW(ConstituentSpec::algo2().validate());

  ConstituentSpec bad = ConstituentSpec::algo1();
  bad.preprocessing = PreprocessingTag::normalized_mean_scaled;
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  ConstituentSpec bad2 = ConstituentSpec::algo2();
  bad2.negative_class = Histology::NormalSquamous;
  CHECK_THROWS_AS(bad2.validate(), ValidationError);
}

TEST_CASE("run_constituent produces single/ave/med reports") {
  const Dataset train = synthesize_dataset(small_synth(42));
  const Dataset test = synthesize_dataset(small_synth(43));
  const PipelineConfig cfg = small_run();

  const auto reports =
      run_constituent(ConstituentSpec::algo1(), cfg, train, test);
  REQUIRE(reports.size() == 3);
  CHECK(reports[0].label == "rbf-single");
  CHECK(reports[1].label == "rbf-ave");
  CHECK(reports[2].label == "rbf-med");
  for (const auto& r : reports) {
    CHECK(r.sensitivity_runs.size() == cfg.repetitions);
    CHECK(r.sensitivity.mean >= 0.0);
    CHECK(r.sensitivity.mean <= 100.0);
    CHECK(r.specificity.mean >= 0.0);
    CHECK(r.specificity.mean <= 100.0);
    CHECK_FALSE(r.config_echo.empty());
  }
}

TEST_CASE("constituent runs work for the mlp and logistic families") {
  const Dataset train = synthesize_dataset(small_synth(42));
  const Dataset test = synthesize_dataset(small_synth(43));
  PipelineConfig cfg = small_run();
  cfg.train.learning_rate = 0.5;

  const auto mlp_reports = run_constituent(
      ConstituentSpec::algo2({}, ModelFamily::mlp), cfg, train, test);
  CHECK(mlp_reports[1].label == "mlp-ave");

  const auto logistic_reports = run_constituent(
      ConstituentSpec::algo1({}, ModelFamily::logistic), cfg, train, test);
  CHECK(logistic_reports[1].label == "logistic-ave");
}

TEST_CASE("constituent runs support principal-component features") {
  const Dataset train = synthesize_dataset(small_synth(42));
  const Dataset test = synthesize_dataset(small_synth(43));
  PipelineConfig cfg = small_run();
  cfg.train.learning_rate = 0.1;

  FeatureSet features;
  features.kind = FeatureSet::Kind::pcs;
  features.pc_count = 3;
  const auto reports = run_constituent(
      ConstituentSpec::algo1(features, ModelFamily::rbf), cfg, train, test);
  REQUIRE(reports.size() == 3);
}

TEST_CASE("two-step cascade evaluates on the full test set") {
  const Dataset train = synthesize_dataset(small_synth(42));
  const Dataset test = synthesize_dataset(small_synth(43));
  const PipelineConfig cfg = small_run();

  const auto reports = run_two_step(cfg, train, test);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].label == "2-step rbf-ave");
  CHECK(reports[1].label == "2-step rbf-med");
  for (const auto& r : reports) {
    CHECK(r.sensitivity_runs.size() == cfg.repetitions);
  }
}

TEST_CASE("one-step runner keeps kernels frozen at their initialization") {
  const Dataset train_ds = synthesize_dataset(small_synth(42));

  const FeatureMatrix all = build_one_step_features(train_ds);
  const FeatureMatrix train = filter_rows(
      all, [](Histology h) { return h != Histology::Inflammation; });
  const auto targets = sil_targets(train);
  const auto ids = trim_class_ids(train);

  TrainConfig short_cfg;
  short_cfg.learning_rate = 0.03;
  short_cfg.max_epochs = 1;
  short_cfg.seed = 500;
  TrainConfig long_cfg = short_cfg;
  long_cfg.max_epochs = 2000;

  auto train_once = [&](const TrainConfig& c) {
    RbfInitPolicy init;
    init.kind = RbfInitPolicy::Kind::kmeans_on_trimmed;
    init.kernel_count = 10;
    init.kernels_trainable = false;
    init.init_points = trim_training_set(train, ids, c.seed);
    return train_rbf(c, train, targets, init);
  };
  const RbfNetwork a = train_once(short_cfg);
  const RbfNetwork b = train_once(long_cfg);
  CHECK(a.centers == b.centers);
  CHECK(a.widths == b.widths);
}

TEST_CASE("one-step runner reports and respects the inflammation flag") {
  const Dataset train = synthesize_dataset(small_synth(42));
  const Dataset test = synthesize_dataset(small_synth(43));
  PipelineConfig cfg = small_run();

  const auto with_infl = run_one_step(cfg, train, test);
  REQUIRE(with_infl.size() == 3);
  CHECK(with_infl[1].label == "1-step rbf-ave");

  cfg.exclude_inflammation = true;
  const auto without_infl = run_one_step(cfg, train, test);
  REQUIRE(without_infl.size() == 3);
  // Sensitivity is unaffected by dropping non-SIL rows.
  CHECK(without_infl[1].sensitivity.mean ==
        doctest::Approx(with_infl[1].sensitivity.mean));
}

TEST_CASE("cost sweep emits grouped, ordered rows") {
  const Dataset train = synthesize_dataset(small_synth(42));
  const Dataset test = synthesize_dataset(small_synth(43));
  const PipelineConfig cfg = small_run();

  SUBCASE("singleton cost list") {
    const std::vector<double> costs = {2.5};
    const TradeoffCurve curve = cost_sweep(cfg, costs, train, test);
    REQUIRE(curve.points.size() == 2);  // one ave row, one med row
    CHECK(curve.points[0].combiner == Combiner::average);
    CHECK(curve.points[1].combiner == Combiner::median);
    CHECK(curve.points[0].cost == 2.5);
  }

  SUBCASE("duplicate costs produce deterministic duplicate rows") {
    const std::vector<double> costs = {2.0, 2.0};
    const TradeoffCurve curve = cost_sweep(cfg, costs, train, test);
    REQUIRE(curve.points.size() == 4);
    CHECK(curve.points[0].sensitivity.mean == curve.points[1].sensitivity.mean);
    CHECK(curve.points[0].specificity.mean == curve.points[1].specificity.mean);
  }

  SUBCASE("invalid costs are rejected") {
    CHECK_THROWS_AS(cost_sweep(cfg, std::vector<double>{}, train, test),
                    ValidationError);
    CHECK_THROWS_AS(cost_sweep(cfg, std::vector<double>{-1.0}, train, test),
                    ValidationError);
  }
}

TEST_CASE("tradeoff files carry the documented layout") {
  TradeoffCurve curve;
  curve.points = {
      {Combiner::average, 1.0, {61.0, 1.0}, {85.0, 2.0}},
      {Combiner::average, 5.0, {97.0, 0.5}, {39.0, 1.0}},
      {Combiner::median, 1.0, {61.0, 1.0}, {84.0, 2.0}},
      {Combiner::median, 5.0, {97.0, 1.0}, {37.0, 1.5}},
  };
  const auto dir =
      std::filesystem::temp_directory_path() / "fluorosil_tests" / "tradeoff";
  std::filesystem::remove_all(dir);
  write_tradeoff_csv(curve, dir / "tradeoff.csv");
  write_tradeoff_plot_data(curve, dir);

  std::ifstream csv(dir / "tradeoff.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "combiner,cost,sensitivity,specificity,sens_std,spec_std");
  std::getline(csv, line);
  CHECK(line == "ave,1,61.0,85.0,1.0,2.0");

  std::ifstream plot(dir / "tradeoff_plot_ave.csv");
  std::getline(plot, line);
  CHECK(line == "specificity,sensitivity");
  std::getline(plot, line);
  CHECK(line == "85.0,61.0");
}

TEST_CASE("mixed MLP+RBF pools are constructible for comparison") {
  const Dataset train_ds = synthesize_dataset(small_synth(42));
  const Dataset test_ds = synthesize_dataset(small_synth(43));

  const FeatureMatrix train = select_columns(
      filter_rows(normalize(train_ds),
                  [](Histology h) {
                    return h == Histology::NormalSquamous || is_sil(h);
                  }),
      algo1_reduced_pairs());
  const FeatureMatrix test = select_columns(normalize(test_ds),
                                            algo1_reduced_pairs());
  const auto targets = sil_targets(train);

  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.max_epochs = 300;
  cfg.cost = CostPolicy::make(2.0, 1.0, 0.5);

  const TrainFn mixed = [&](std::size_t index, const TrainConfig& c) {
    if (index % 2 == 0) {
      RbfInitPolicy init;
      init.kernel_count = 5;
      return Classifier(train_rbf(c, train, targets, init));
    }
    return Classifier(train_mlp(c, train, targets, 5));
  };
  const Ensemble pool = build_ensemble(mixed, cfg, 4, 9000);
  REQUIRE(pool.size() == 4);
  CHECK(std::holds_alternative<RbfNetwork>(pool.members[0]));
  CHECK(std::holds_alternative<MlpNetwork>(pool.members[1]));

  int correct = 0;
  for (std::size_t r = 0; r < test.rows(); ++r) {
    const auto cls = ensemble_classify(pool, test.row(r), cfg.cost);
    if (cls.sil == is_sil(test.row_keys[r].histology)) ++correct;
  }
  CHECK(correct > 0);
}
