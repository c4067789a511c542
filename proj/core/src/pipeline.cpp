#include "fluorosil/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>

#include "detail/text_util.hpp"
#include "fluorosil/errors.hpp"
#include "fluorosil/rng.hpp"

namespace fluorosil {

const std::string& to_string(ModelFamily family) {
  static const std::array<std::string, 3> names = {"logistic", "mlp", "rbf"};
  return names[static_cast<std::size_t>(family)];
}

ModelFamily model_family_from_string(const std::string& token) {
  for (auto f : {ModelFamily::logistic, ModelFamily::mlp, ModelFamily::rbf}) {
    if (token == to_string(f)) return f;
  }
  throw ValidationError("unknown model family '" + token + "'");
}

ConstituentSpec ConstituentSpec::algo1(FeatureSet features, ModelFamily family) {
  ConstituentSpec spec;
  spec.id = ConstituentId::algo1;
  spec.preprocessing = PreprocessingTag::normalized;
  spec.features = features;
  spec.negative_class = Histology::NormalSquamous;
  spec.family = family;
  spec.preset = features.kind == FeatureSet::Kind::pcs ? ModelPreset::pca3
                                                       : ModelPreset::reduced13;
  return spec;
}

ConstituentSpec ConstituentSpec::algo2(FeatureSet features, ModelFamily family) {
  ConstituentSpec spec;
  spec.id = ConstituentId::algo2;
  spec.preprocessing = PreprocessingTag::normalized_mean_scaled;
  spec.features = features;
  spec.negative_class = Histology::NormalColumnar;
  spec.family = family;
  spec.preset = features.kind == FeatureSet::Kind::pcs ? ModelPreset::pca3
                                                       : ModelPreset::reduced13;
  return spec;
}

void ConstituentSpec::validate() const {
  if (id == ConstituentId::algo1 &&
      (preprocessing != PreprocessingTag::normalized ||
       negative_class != Histology::NormalSquamous)) {
    throw ValidationError(
        "constituent algorithm (1) pairs normalized spectra with the normal "
        "squamous class");
  }
  if (id == ConstituentId::algo2 &&
      (preprocessing != PreprocessingTag::normalized_mean_scaled ||
       negative_class != Histology::NormalColumnar)) {
    throw ValidationError(
        "constituent algorithm (2) pairs normalized mean-scaled spectra with "
        "the normal columnar class");
  }
}

Classification two_step_classify(const std::function<Classification()>& step1,
                                 const std::function<Classification()>& step2) {
  const Classification first = step1();
  if (!first.sil) return first;  // terminates; step 2 never runs
  return step2();
}

Classification classify_two_step(const TwoStepClassifier& ts,
                                 std::span<const double> x1,
                                 std::span<const double> x2,
                                 Combiner combiner) {
  return two_step_classify(
      [&] {
        return classify_outputs(ensemble_outputs(ts.step1, x1, combiner),
                                ts.step1_cost);
      },
      [&] {
        return classify_outputs(ensemble_outputs(ts.step2, x2, combiner),
                                ts.step2_cost);
      });
}

FeatureMatrix build_one_step_features(const Dataset& ds,
                                      MeanScaleReference reference) {
  const FeatureMatrix normalized = normalize(ds);
  const FeatureMatrix part1 = select_columns(normalized, algo1_reduced_pairs());
  const FeatureMatrix part2 =
      select_columns(mean_scale(normalized, reference), algo2_reduced_pairs());

  FeatureMatrix out;
  out.tag = PreprocessingTag::concatenated;
  out.row_keys = part1.row_keys;
  out.column_labels = part1.column_labels;
  out.column_labels.insert(out.column_labels.end(), part2.column_labels.begin(),
                           part2.column_labels.end());
  out.values = Matrix(part1.rows(), part1.cols() + part2.cols());
  for (std::size_t r = 0; r < part1.rows(); ++r) {
    for (std::size_t c = 0; c < part1.cols(); ++c) {
      out.at(r, c) = part1.at(r, c);
    }
    for (std::size_t c = 0; c < part2.cols(); ++c) {
      out.at(r, part1.cols() + c) = part2.at(r, c);
    }
  }
  return out;
}

std::vector<int> trim_class_ids(const FeatureMatrix& fm) {
  std::vector<int> ids(fm.rows());
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    const Histology h = fm.row_keys[r].histology;
    if (is_sil(h)) {
      ids[r] = 2;
    } else if (h == Histology::NormalSquamous) {
      ids[r] = 0;
    } else if (h == Histology::NormalColumnar) {
      ids[r] = 1;
    } else {
      throw ValidationError(
          "trim_class_ids: inflammation rows do not belong to training sets");
    }
  }
  return ids;
}

FeatureMatrix trim_training_set(const FeatureMatrix& fm,
                                const std::vector<int>& class_ids,
                                std::uint64_t seed) {
  fm.validate();
  if (class_ids.size() != fm.rows()) {
    throw ValidationError("trim_training_set: class id count mismatch");
  }
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    groups[class_ids[r]].push_back(r);
  }
  if (groups.empty()) {
    throw ValidationError("trim_training_set: empty matrix");
  }
  std::size_t minority = std::numeric_limits<std::size_t>::max();
  for (const auto& [id, rows] : groups) {
    minority = std::min(minority, rows.size());
  }
  if (minority == 0) {
    throw ValidationError("trim_training_set: a class has no samples");
  }

  Rng rng(seed);
  std::vector<std::size_t> keep;
  for (auto& [id, rows] : groups) {
    rng.shuffle(rows);
    rows.resize(minority);
    keep.insert(keep.end(), rows.begin(), rows.end());
  }
  std::sort(keep.begin(), keep.end());

  FeatureMatrix out;
  out.tag = fm.tag;
  out.column_labels = fm.column_labels;
  out.values = Matrix(keep.size(), fm.cols());
  out.row_keys.reserve(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.row_keys.push_back(fm.row_keys[keep[i]]);
    const auto src = fm.row(keep[i]);
    std::copy(src.begin(), src.end(), out.values.row(i).begin());
  }
  return out;
}

FeatureMatrix filter_rows(const FeatureMatrix& fm,
                          const std::function<bool(Histology)>& keep) {
  fm.validate();
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    if (keep(fm.row_keys[r].histology)) rows.push_back(r);
  }
  FeatureMatrix out;
  out.tag = fm.tag;
  out.column_labels = fm.column_labels;
  out.values = Matrix(rows.size(), fm.cols());
  out.row_keys.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row_keys.push_back(fm.row_keys[rows[i]]);
    const auto src = fm.row(rows[i]);
    std::copy(src.begin(), src.end(), out.values.row(i).begin());
  }
  return out;
}

namespace {

// Evaluation truth and row filter shared by the runners.
std::vector<std::size_t> evaluation_rows(const FeatureMatrix& test,
                                         bool exclude_inflammation) {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < test.rows(); ++r) {
    if (exclude_inflammation &&
        test.row_keys[r].histology == Histology::Inflammation) {
      continue;
    }
    rows.push_back(r);
  }
  return rows;
}

std::pair<double, double> score_predictions(
    const FeatureMatrix& test, const std::vector<std::size_t>& rows,
    const std::function<bool(std::size_t)>& predict_sil) {
  std::vector<int> predicted, truth;
  predicted.reserve(rows.size());
  truth.reserve(rows.size());
  for (std::size_t r : rows) {
    predicted.push_back(predict_sil(r) ? 1 : 0);
    truth.push_back(is_sil(test.row_keys[r].histology) ? 1 : 0);
  }
  const auto counts = confusion(predicted, truth);
  return sens_spec(counts);
}

std::vector<std::pair<std::string, std::string>> config_echo_base(
    const PipelineConfig& cfg, const std::string& pipeline,
    const std::string& combiner) {
  return {
      {"pipeline", pipeline},
      {"combiner", combiner},
      {"pool_size", std::to_string(cfg.pool_size)},
      {"repetitions", std::to_string(cfg.repetitions)},
      {"base_seed", std::to_string(cfg.base_seed)},
      {"sil_cost", detail::format_double(cfg.train.cost.sil_cost)},
      {"normal_cost", detail::format_double(cfg.train.cost.normal_cost)},
      {"decision_threshold",
       detail::format_double(cfg.train.cost.decision_threshold)},
      {"learning_rate", detail::format_double(cfg.train.learning_rate)},
      {"max_epochs", std::to_string(cfg.train.max_epochs)},
      {"exclude_inflammation", cfg.exclude_inflammation ? "1" : "0"},
  };
}

struct RepetitionScores {
  std::vector<double> single_sens, single_spec;
  std::vector<double> ave_sens, ave_spec;
  std::vector<double> med_sens, med_spec;
};

// Builds `repetitions` pools and scores the first member plus both
// combiners of each pool.
RepetitionScores run_repetitions(
    const PipelineConfig& cfg, const TrainFn& train_member,
    const FeatureMatrix& test, const std::vector<std::size_t>& rows) {
  RepetitionScores scores;
  const auto ensembles =
      repeat_ensembles(train_member, cfg.train, cfg.pool_size, cfg.repetitions,
                       cfg.base_seed, cfg.pool_size);
  for (const auto& ensemble : ensembles) {
    const auto [s_sens, s_spec] =
        score_predictions(test, rows, [&](std::size_t r) {
          return classify(ensemble.members.front(), test.row(r),
                          cfg.train.cost)
              .sil;
        });
    scores.single_sens.push_back(s_sens);
    scores.single_spec.push_back(s_spec);

    for (const Combiner combiner : {Combiner::average, Combiner::median}) {
      const auto [sens, spec] =
          score_predictions(test, rows, [&](std::size_t r) {
            return classify_outputs(
                       ensemble_outputs(ensemble, test.row(r), combiner),
                       cfg.train.cost)
                .sil;
          });
      if (combiner == Combiner::average) {
        scores.ave_sens.push_back(sens);
        scores.ave_spec.push_back(spec);
      } else {
        scores.med_sens.push_back(sens);
        scores.med_spec.push_back(spec);
      }
    }
  }
  return scores;
}

std::vector<EvalReport> reports_from_scores(const RepetitionScores& scores,
                                            const PipelineConfig& cfg,
                                            const std::string& pipeline,
                                            const std::string& family) {
  std::vector<EvalReport> reports;
  reports.push_back(make_report(family + "-single", scores.single_sens,
                                scores.single_spec,
                                config_echo_base(cfg, pipeline, "single")));
  reports.push_back(make_report(family + "-ave", scores.ave_sens,
                                scores.ave_spec,
                                config_echo_base(cfg, pipeline, "ave")));
  reports.push_back(make_report(family + "-med", scores.med_sens,
                                scores.med_spec,
                                config_echo_base(cfg, pipeline, "med")));
  return reports;
}

// Feature matrices for one constituent: training rows restricted to the
// negative class + SILs, test rows to the same two classes.
struct ConstituentFeatures {
  FeatureMatrix train;
  FeatureMatrix test;
};

ConstituentFeatures constituent_features(const ConstituentSpec& spec,
                                         const PipelineConfig& cfg,
                                         const Dataset& train_ds,
                                         const Dataset& test_ds) {
  spec.validate();
  FeatureMatrix train_full = normalize(train_ds);
  FeatureMatrix test_full = normalize(test_ds);
  if (spec.preprocessing == PreprocessingTag::normalized_mean_scaled) {
    train_full = mean_scale(train_full, cfg.mean_scale_reference);
    test_full = mean_scale(test_full, cfg.mean_scale_reference);
  }

  const auto keep = [&](Histology h) {
    return h == spec.negative_class || is_sil(h);
  };
  FeatureMatrix train = filter_rows(train_full, keep);
  FeatureMatrix test = filter_rows(test_full, keep);

  switch (spec.features.kind) {
    case FeatureSet::Kind::full160:
      break;
    case FeatureSet::Kind::reduced13: {
      const auto pairs = spec.id == ConstituentId::algo1 ? algo1_reduced_pairs()
                                                         : algo2_reduced_pairs();
      train = select_columns(train, pairs);
      test = select_columns(test, pairs);
      break;
    }
    case FeatureSet::Kind::pcs: {
      const std::size_t k = std::min(spec.features.pc_count,
                                     std::min(train.rows() - 1, train.cols()));
      const PcaModel model = fit_pca(train, k);
      const FeatureMatrix train_scores =
          project(model, train, model.component_count());
      const auto selection = select_components(train_scores, sil_targets(train),
                                               spec.features.alpha);
      if (selection.indices.empty()) {
        throw NumericalError(
            "constituent_features: no diagnostically relevant components at "
            "alpha " +
            detail::format_double(spec.features.alpha));
      }
      const FeatureMatrix test_scores =
          project(model, test, model.component_count());
      // Keep only the selected score columns.
      auto subset = [&](const FeatureMatrix& scores) {
        FeatureMatrix out;
        out.tag = scores.tag;
        out.row_keys = scores.row_keys;
        out.values = Matrix(scores.rows(), selection.indices.size());
        for (std::size_t i = 0; i < selection.indices.size(); ++i) {
          out.column_labels.push_back(
              ColumnLabel::for_component(selection.indices[i] + 1));
          for (std::size_t r = 0; r < scores.rows(); ++r) {
            out.at(r, i) = scores.at(r, selection.indices[i]);
          }
        }
        return out;
      };
      train = subset(train_scores);
      test = subset(test_scores);
      break;
    }
  }
  return {std::move(train), std::move(test)};
}

TrainFn make_train_fn(const ConstituentSpec& spec, const FeatureMatrix& train) {
  const auto targets = sil_targets(train);
  switch (spec.family) {
    case ModelFamily::logistic:
      return [train, targets](std::size_t, const TrainConfig& cfg) {
        return Classifier(train_logistic(train, targets, cfg.cost));
      };
    case ModelFamily::mlp: {
      const std::size_t hidden = mlp_hidden_units(spec.preset);
      return [train, targets, hidden](std::size_t, const TrainConfig& cfg) {
        return Classifier(train_mlp(cfg, train, targets, hidden));
      };
    }
    case ModelFamily::rbf: {
      RbfInitPolicy init;
      init.kernel_count = rbf_kernel_count(spec.preset);
      if (spec.id == ConstituentId::algo2) {
        // Half the kernels verbatim from the scarce normal columnar class,
        // all kernels frozen during training.
        init.kind = RbfInitPolicy::Kind::half_fixed_to_class;
        init.fixed_class = Histology::NormalColumnar;
        init.kernels_trainable = false;
      } else {
        init.kind = RbfInitPolicy::Kind::kmeans_all;
        init.kernels_trainable = true;
      }
      return [train, targets, init](std::size_t, const TrainConfig& cfg) {
        return Classifier(train_rbf(cfg, train, targets, init));
      };
    }
  }
  throw ValidationError("unknown model family");
}

}  // namespace

std::vector<EvalReport> run_constituent(const ConstituentSpec& spec,
                                        const PipelineConfig& cfg,
                                        const Dataset& train_ds,
                                        const Dataset& test_ds) {
  cfg.train.validate();
  const auto features = constituent_features(spec, cfg, train_ds, test_ds);
  const auto rows = evaluation_rows(features.test, cfg.exclude_inflammation);
  const auto train_member = make_train_fn(spec, features.train);
  const auto scores = run_repetitions(cfg, train_member, features.test, rows);
  const std::string pipeline =
      spec.id == ConstituentId::algo1 ? "constituent1" : "constituent2";
  return reports_from_scores(scores, cfg, pipeline, to_string(spec.family));
}

std::vector<EvalReport> run_two_step(const PipelineConfig& cfg,
                                     const Dataset& train_ds,
                                     const Dataset& test_ds,
                                     ModelFamily family) {
  cfg.train.validate();
  const auto spec1 = ConstituentSpec::algo1({}, family);
  const auto spec2 = ConstituentSpec::algo2({}, family);

  // Constituent features, but the cascade is evaluated on the whole test set.
  FeatureMatrix train_norm = normalize(train_ds);
  FeatureMatrix train_ms = mean_scale(train_norm, cfg.mean_scale_reference);
  FeatureMatrix test_norm = normalize(test_ds);
  FeatureMatrix test_ms = mean_scale(test_norm, cfg.mean_scale_reference);

  FeatureMatrix train1 = select_columns(
      filter_rows(train_norm,
                  [](Histology h) {
                    return h == Histology::NormalSquamous || is_sil(h);
                  }),
      algo1_reduced_pairs());
  FeatureMatrix train2 = select_columns(
      filter_rows(train_ms,
                  [](Histology h) {
                    return h == Histology::NormalColumnar || is_sil(h);
                  }),
      algo2_reduced_pairs());
  FeatureMatrix test1 = select_columns(test_norm, algo1_reduced_pairs());
  FeatureMatrix test2 = select_columns(test_ms, algo2_reduced_pairs());

  const auto rows = evaluation_rows(test1, cfg.exclude_inflammation);
  const auto train_fn1 = make_train_fn(spec1, train1);
  const auto train_fn2 = make_train_fn(spec2, train2);

  std::vector<double> ave_sens, ave_spec, med_sens, med_spec;
  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    const std::uint64_t seed1 = cfg.base_seed + rep * (2 * cfg.pool_size);
    const std::uint64_t seed2 = seed1 + cfg.pool_size;
    TwoStepClassifier ts;
    ts.step1 = build_ensemble(train_fn1, cfg.train, cfg.pool_size, seed1);
    ts.step2 = build_ensemble(train_fn2, cfg.train, cfg.pool_size, seed2);
    ts.step1_cost = cfg.train.cost;
    ts.step2_cost = cfg.train.cost;

    for (const Combiner combiner : {Combiner::average, Combiner::median}) {
      const auto [sens, spec] =
          score_predictions(test1, rows, [&](std::size_t r) {
            return classify_two_step(ts, test1.row(r), test2.row(r), combiner)
                .sil;
          });
      if (combiner == Combiner::average) {
        ave_sens.push_back(sens);
        ave_spec.push_back(spec);
      } else {
        med_sens.push_back(sens);
        med_spec.push_back(spec);
      }
    }
  }

  const std::string family_name = to_string(family);
  std::vector<EvalReport> reports;
  reports.push_back(make_report("2-step " + family_name + "-ave", ave_sens,
                                ave_spec,
                                config_echo_base(cfg, "two-step", "ave")));
  reports.push_back(make_report("2-step " + family_name + "-med", med_sens,
                                med_spec,
                                config_echo_base(cfg, "two-step", "med")));
  return reports;
}

std::vector<EvalReport> run_one_step(const PipelineConfig& cfg,
                                     const Dataset& train_ds,
                                     const Dataset& test_ds) {
  cfg.train.validate();
  const FeatureMatrix train_all =
      build_one_step_features(train_ds, cfg.mean_scale_reference);
  const FeatureMatrix test =
      build_one_step_features(test_ds, cfg.mean_scale_reference);

  // Training uses the three histology groups with biopsy-confirmed labels;
  // inflammation flows through the test set as non-SIL.
  const FeatureMatrix train = filter_rows(train_all, [](Histology h) {
    return h != Histology::Inflammation;
  });
  const auto targets = sil_targets(train);
  const auto class_ids = trim_class_ids(train);

  const TrainFn train_member = [&train, &targets, &class_ids](
                                   std::size_t, const TrainConfig& cfg_member) {
    RbfInitPolicy init;
    init.kind = RbfInitPolicy::Kind::kmeans_on_trimmed;
    init.kernel_count = 10;
    init.kernels_trainable = false;
    init.init_points =
        trim_training_set(train, class_ids, cfg_member.seed);
    return Classifier(train_rbf(cfg_member, train, targets, init));
  };

  const auto rows = evaluation_rows(test, cfg.exclude_inflammation);
  const auto scores = run_repetitions(cfg, train_member, test, rows);
  return reports_from_scores(scores, cfg, "one-step", "1-step rbf");
}

TradeoffCurve cost_sweep(const PipelineConfig& cfg, std::span<const double> costs,
                         const Dataset& train_ds, const Dataset& test_ds) {
  if (costs.empty()) {
    throw ValidationError("cost_sweep: cost list is empty");
  }
  for (double c : costs) {
    if (!(c > 0.0)) {
      throw ValidationError("cost_sweep: costs must be positive");
    }
  }

  std::vector<TradeoffPoint> ave_points, med_points;
  for (double c : costs) {
    PipelineConfig point_cfg = cfg;
    point_cfg.train.cost.sil_cost = c;
    const auto reports = run_one_step(point_cfg, train_ds, test_ds);
    for (const auto& report : reports) {
      TradeoffPoint point;
      point.cost = c;
      point.sensitivity = report.sensitivity;
      point.specificity = report.specificity;
      if (report.label.ends_with("-ave")) {
        point.combiner = Combiner::average;
        ave_points.push_back(point);
      } else if (report.label.ends_with("-med")) {
        point.combiner = Combiner::median;
        med_points.push_back(point);
      }
    }
  }

  TradeoffCurve curve;
  curve.points = std::move(ave_points);
  curve.points.insert(curve.points.end(), med_points.begin(), med_points.end());
  return curve;
}

void write_tradeoff_csv(const TradeoffCurve& curve,
                        const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) {
    throw ValidationError("cannot write tradeoff file " + path.string());
  }
  out << "combiner,cost,sensitivity,specificity,sens_std,spec_std\n";
  char buf[64];
  for (const auto& p : curve.points) {
    std::snprintf(buf, sizeof(buf), "%s,%g,%.1f,%.1f,%.1f,%.1f\n",
                  to_string(p.combiner).c_str(), p.cost, p.sensitivity.mean,
                  p.specificity.mean, p.sensitivity.std, p.specificity.std);
    out << buf;
  }
  if (!out) {
    throw ValidationError("failed while writing " + path.string());
  }
}

void write_tradeoff_plot_data(const TradeoffCurve& curve,
                              const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  for (const Combiner combiner : {Combiner::average, Combiner::median}) {
    const auto path =
        directory / ("tradeoff_plot_" + to_string(combiner) + ".csv");
    std::ofstream out(path);
    if (!out) {
      throw ValidationError("cannot write plot data file " + path.string());
    }
    out << "specificity,sensitivity\n";
    char buf[64];
    for (const auto& p : curve.points) {
      if (p.combiner != combiner) continue;
      std::snprintf(buf, sizeof(buf), "%.1f,%.1f\n", p.specificity.mean,
                    p.sensitivity.mean);
      out << buf;
    }
  }
}

}  // namespace fluorosil
