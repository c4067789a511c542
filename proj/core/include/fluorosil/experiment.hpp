#ifndef FLUOROSIL_EXPERIMENT_HPP
#define FLUOROSIL_EXPERIMENT_HPP

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fluorosil/pipeline.hpp"

namespace fluorosil {

// Everything a reproducible experiment needs, loadable from a flat
// key-value config file; every key can be overridden individually.
struct ExperimentConfig {
  std::string pipeline = "one-step";  // constituent1|constituent2|two-step|one-step
  std::string dataset_source = "synthetic";  // synthetic | file
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  std::filesystem::path output_dir;  // default: $FLUOROSIL_OUT or ./out

  SynthConfig synth_train;
  SynthConfig synth_test;
  bool test_seed_explicit = false;

  ModelFamily family = ModelFamily::rbf;
  FeatureSet::Kind feature_kind = FeatureSet::Kind::reduced13;
  std::size_t pc_count = 3;
  double alpha = 0.05;

  PipelineConfig run;
  std::vector<double> sweep_costs = {1.0, 2.0, 2.5, 3.0, 4.0, 5.0};
  std::string combiner = "both";  // both | ave | med

  NormalizeGranularity normalize_granularity =
      NormalizeGranularity::per_excitation;
  NormalizeStatistic normalize_statistic = NormalizeStatistic::peak;

  // reduce-wavelengths settings
  std::size_t reduce_pc_count = 10;
  double reduce_alpha = 0.05;
  std::optional<std::size_t> reduce_top_k = 13;
  std::optional<double> reduce_threshold;
  std::string reduce_preprocessing = "normalized";

  static ExperimentConfig defaults();

  // Applies one `key = value` override. Unknown keys throw ValidationError.
  void apply(const std::string& key, const std::string& value);

  // Complete effective configuration in manifest order. Loading these pairs
  // back reproduces this config exactly.
  std::vector<std::pair<std::string, std::string>> to_kv() const;

  void validate() const;
};

// Flat key-value file: `key = value` lines, '#' comments, blank lines ok.
std::vector<std::pair<std::string, std::string>> read_kv_file(
    const std::filesystem::path& path);
void write_kv_file(
    const std::vector<std::pair<std::string, std::string>>& pairs,
    const std::filesystem::path& path);

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// The train/test datasets the config describes (synthesized in memory or
// loaded from the configured files).
std::pair<Dataset, Dataset> resolve_datasets(const ExperimentConfig& cfg);

// Subcommand bodies. Progress/result lines go to `out`; files land under
// cfg.output_dir. Each writes a manifest capturing the effective config.
void cmd_generate(const ExperimentConfig& cfg, std::ostream& out);
void cmd_run(const ExperimentConfig& cfg, std::ostream& out);
void cmd_sweep(const ExperimentConfig& cfg, std::ostream& out);
void cmd_reduce_wavelengths(const ExperimentConfig& cfg, std::ostream& out);
void cmd_preprocess(const ExperimentConfig& cfg,
                    const std::filesystem::path& input,
                    const std::filesystem::path& output,
                    const std::string& mode, std::ostream& out);
void cmd_report(const std::filesystem::path& report_csv, std::ostream& out);

}  // namespace fluorosil

#endif
