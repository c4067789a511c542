#ifndef FLUOROSIL_PIPELINE_HPP
#define FLUOROSIL_PIPELINE_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fluorosil/dimred.hpp"
#include "fluorosil/ensemble.hpp"
#include "fluorosil/eval.hpp"
#include "fluorosil/models.hpp"
#include "fluorosil/preprocess.hpp"
#include "fluorosil/synthetic.hpp"

namespace fluorosil {

enum class ModelFamily { logistic, mlp, rbf };
const std::string& to_string(ModelFamily family);
ModelFamily model_family_from_string(const std::string& token);

enum class ConstituentId { algo1, algo2 };

struct FeatureSet {
  enum class Kind { full160, pcs, reduced13 };
  Kind kind = Kind::reduced13;
  std::size_t pc_count = 3;  // components fitted for Kind::pcs
  double alpha = 0.05;       // t-test significance for component selection
};

// One constituent two-class problem: algorithm (1) separates SILs from
// normal squamous tissue on normalized spectra, algorithm (2) separates
// SILs from normal columnar tissue on normalized mean-scaled spectra.
struct ConstituentSpec {
  ConstituentId id = ConstituentId::algo1;
  PreprocessingTag preprocessing = PreprocessingTag::normalized;
  FeatureSet features;
  Histology negative_class = Histology::NormalSquamous;
  ModelFamily family = ModelFamily::rbf;
  ModelPreset preset = ModelPreset::reduced13;

  static ConstituentSpec algo1(FeatureSet features = {},
                               ModelFamily family = ModelFamily::rbf);
  static ConstituentSpec algo2(FeatureSet features = {},
                               ModelFamily family = ModelFamily::rbf);

  // algo1 must pair with normalized + NS, algo2 with mean-scaled + NC.
  void validate() const;
};

// Shared experiment knobs.
struct PipelineConfig {
  std::size_t pool_size = 20;
  std::size_t repetitions = 10;
  std::uint64_t base_seed = 1000;
  TrainConfig train;
  MeanScaleReference mean_scale_reference = MeanScaleReference::per_patient;
  // Report flag: drop inflammation samples from the test set before scoring.
  bool exclude_inflammation = false;
};

// The Fig.-4 cascade on two already-made step verdicts; step 2 runs only
// when step 1 says SIL.
Classification two_step_classify(
    const std::function<Classification()>& step1,
    const std::function<Classification()>& step2);

struct TwoStepClassifier {
  Ensemble step1;
  Ensemble step2;
  CostPolicy step1_cost;
  CostPolicy step2_cost;
};

// x1 / x2 are the sample's algorithm-(1) / algorithm-(2) feature rows.
Classification classify_two_step(const TwoStepClassifier& ts,
                                 std::span<const double> x1,
                                 std::span<const double> x2,
                                 Combiner combiner);

// 26-dimensional inputs: the 13 algorithm-(1) pairs of the normalized
// spectra concatenated with the 13 algorithm-(2) pairs of the normalized
// mean-scaled spectra. Column labels carry per-column provenance.
FeatureMatrix build_one_step_features(
    const Dataset& ds,
    MeanScaleReference reference = MeanScaleReference::per_patient);

struct OneStepClassifier {
  Ensemble ensemble;  // members over the 26-dim concatenated features
  CostPolicy cost;
};

// Random subsample equalizing the class counts at the minority count.
// class_ids give the grouping (e.g. NS / NC / SIL); row order is preserved.
// Used only to initialize kernels, never for weight training.
FeatureMatrix trim_training_set(const FeatureMatrix& fm,
                                const std::vector<int>& class_ids,
                                std::uint64_t seed);

// NS -> 0, NC -> 1, SIL -> 2 (inflammation rows are not part of training
// sets and have no trim class).
std::vector<int> trim_class_ids(const FeatureMatrix& fm);

// Keeps rows whose histology satisfies the predicate.
FeatureMatrix filter_rows(const FeatureMatrix& fm,
                          const std::function<bool(Histology)>& keep);

// Constituent experiment: trains single networks and 20-member ensembles
// over `repetitions` seed blocks, evaluates on the test rows of the
// constituent's two classes. Reports: single, ave, med.
std::vector<EvalReport> run_constituent(const ConstituentSpec& spec,
                                        const PipelineConfig& cfg,
                                        const Dataset& train_ds,
                                        const Dataset& test_ds);

// Two-step cascade with both constituents on their reduced-parameter sets;
// evaluated on the full test set. Reports: ave, med.
std::vector<EvalReport> run_two_step(const PipelineConfig& cfg,
                                     const Dataset& train_ds,
                                     const Dataset& test_ds,
                                     ModelFamily family = ModelFamily::rbf);

// One-step protocol: 10 frozen kernels k-means-initialized on a trimmed
// training subsample, cost-weighted output training, `pool_size`-member
// ensembles repeated `repetitions` times. Reports: single, ave, med.
std::vector<EvalReport> run_one_step(const PipelineConfig& cfg,
                                     const Dataset& train_ds,
                                     const Dataset& test_ds);

struct TradeoffPoint {
  Combiner combiner = Combiner::average;
  double cost = 1.0;
  MeanStd sensitivity;
  MeanStd specificity;
};

struct TradeoffCurve {
  std::vector<TradeoffPoint> points;  // grouped by combiner, cost ascending
};

// Re-trains and evaluates the one-step pipeline at each SIL
// misclassification cost.
TradeoffCurve cost_sweep(const PipelineConfig& cfg, std::span<const double> costs,
                         const Dataset& train_ds, const Dataset& test_ds);

// rows: combiner,cost,sensitivity,specificity,sens_std,spec_std
void write_tradeoff_csv(const TradeoffCurve& curve,
                        const std::filesystem::path& path);
// Two-column (specificity, sensitivity) per combiner:
// tradeoff_plot_ave.csv / tradeoff_plot_med.csv under `directory`.
void write_tradeoff_plot_data(const TradeoffCurve& curve,
                              const std::filesystem::path& directory);

}  // namespace fluorosil

#endif
