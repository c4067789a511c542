#include "fluorosil/experiment.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "detail/text_util.hpp"
#include "fluorosil/errors.hpp"

namespace fluorosil {

namespace {

std::filesystem::path default_output_dir() {
  if (const char* env = std::getenv("FLUOROSIL_OUT")) {
    return std::filesystem::path(env);
  }
  return std::filesystem::path("out");
}

std::vector<double> parse_double_list(const std::string& value,
                                      const std::string& key) {
  std::vector<double> out;
  for (const auto& token : detail::split(value, ',')) {
    out.push_back(detail::parse_double(token, "key " + key));
  }
  return out;
}

std::string format_double_list(std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += detail::format_double(values[i]);
  }
  return out;
}

std::array<std::size_t, kHistologyCount> parse_count_list(
    const std::string& value, const std::string& key) {
  const auto tokens = detail::split(value, ',');
  if (tokens.size() != kHistologyCount) {
    throw ValidationError("key " + key + " needs " +
                          std::to_string(kHistologyCount) +
                          " comma-separated counts (NS,NC,INFL,LG,HG)");
  }
  std::array<std::size_t, kHistologyCount> counts{};
  for (std::size_t i = 0; i < kHistologyCount; ++i) {
    const long v = detail::parse_long(tokens[i], "key " + key);
    if (v < 0) throw ValidationError("key " + key + ": counts must be >= 0");
    counts[i] = static_cast<std::size_t>(v);
  }
  return counts;
}

std::string format_count_list(
    const std::array<std::size_t, kHistologyCount>& counts) {
  std::string out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(counts[i]);
  }
  return out;
}

// "390:42,460:55"
std::vector<EmissionBand> parse_bands(const std::string& value,
                                      const std::string& key) {
  std::vector<EmissionBand> bands;
  for (const auto& token : detail::split(value, ',')) {
    const auto parts = detail::split(token, ':');
    if (parts.size() != 2) {
      throw ValidationError("key " + key +
                            ": bands are center:width pairs, got '" + token +
                            "'");
    }
    bands.push_back({detail::parse_double(parts[0], key),
                     detail::parse_double(parts[1], key)});
  }
  return bands;
}

std::string format_bands(std::span<const EmissionBand> bands) {
  std::string out;
  for (std::size_t i = 0; i < bands.size(); ++i) {
    if (i) out += ',';
    out += detail::format_double(bands[i].center_nm) + ":" +
           detail::format_double(bands[i].width_nm);
  }
  return out;
}

std::size_t block_of_excitation(int excitation) {
  const auto& grid = WavelengthGrid::standard();
  for (std::size_t b = 0; b < grid.block_count(); ++b) {
    if (grid.excitations()[b] == excitation) return b;
  }
  throw ValidationError("unknown excitation " + std::to_string(excitation) +
                        " nm (standard grid has 337, 380, 460)");
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  throw ValidationError("key " + key + ": expected a boolean, got '" + value +
                        "'");
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig cfg;
  cfg.synth_train = SynthConfig::defaults();
  cfg.synth_test = SynthConfig::defaults_test();
  cfg.output_dir = default_output_dir();
  cfg.run.pool_size = 20;
  cfg.run.repetitions = 10;
  cfg.run.base_seed = 1000;
  cfg.run.train.learning_rate = 0.03;
  cfg.run.train.max_epochs = 4000;
  cfg.run.train.stop_patience = 30;
  cfg.run.train.min_relative_improvement = 1e-6;
  cfg.run.train.cost = CostPolicy::make(2.5, 1.0, 0.5);
  return cfg;
}

void ExperimentConfig::apply(const std::string& key, const std::string& value) {
  if (key == "pipeline") {
    if (value != "constituent1" && value != "constituent2" &&
        value != "two-step" && value != "one-step") {
      throw ValidationError("pipeline must be constituent1, constituent2, "
                            "two-step or one-step");
    }
    pipeline = value;
  } else if (key == "dataset.source") {
    if (value != "synthetic" && value != "file") {
      throw ValidationError("dataset.source must be synthetic or file");
    }
    dataset_source = value;
  } else if (key == "dataset.train") {
    train_path = value;
  } else if (key == "dataset.test") {
    test_path = value;
  } else if (key == "output.dir") {
    output_dir = value;
  } else if (key == "synth.seed") {
    synth_train.seed =
        static_cast<std::uint64_t>(detail::parse_long(value, key));
    if (!test_seed_explicit) synth_test.seed = synth_train.seed + 1;
  } else if (key == "synth.test_seed") {
    synth_test.seed = static_cast<std::uint64_t>(detail::parse_long(value, key));
    test_seed_explicit = true;
  } else if (key == "synth.train_counts") {
    synth_train.class_counts = parse_count_list(value, key);
  } else if (key == "synth.test_counts") {
    synth_test.class_counts = parse_count_list(value, key);
  } else if (key == "synth.patient_effect") {
    synth_train.patient_effect_scale = detail::parse_double(value, key);
    synth_test.patient_effect_scale = synth_train.patient_effect_scale;
  } else if (key == "synth.site_noise") {
    synth_train.site_noise_scale = detail::parse_double(value, key);
    synth_test.site_noise_scale = synth_train.site_noise_scale;
  } else if (key == "synth.sites_per_patient") {
    const long v = detail::parse_long(value, key);
    if (v < 1) throw ValidationError("synth.sites_per_patient must be >= 1");
    synth_train.sites_per_patient = static_cast<std::size_t>(v);
    synth_test.sites_per_patient = synth_train.sites_per_patient;
  } else if (key.rfind("synth.bands.", 0) == 0) {
    const std::size_t block = block_of_excitation(static_cast<int>(
        detail::parse_long(key.substr(std::string("synth.bands.").size()), key)));
    const auto bands = parse_bands(value, key);
    synth_train.bands[block] = bands;
    synth_test.bands[block] = bands;
  } else if (key.rfind("synth.amps.", 0) == 0) {
    // synth.amps.<excitation>.<class>
    const auto rest = key.substr(std::string("synth.amps.").size());
    const auto dot = rest.find('.');
    if (dot == std::string::npos) {
      throw ValidationError("key " + key +
                            ": expected synth.amps.<excitation>.<class>");
    }
    const std::size_t block = block_of_excitation(
        static_cast<int>(detail::parse_long(rest.substr(0, dot), key)));
    const auto cls =
        static_cast<std::size_t>(histology_from_string(rest.substr(dot + 1)));
    const auto amps = parse_double_list(value, key);
    synth_train.amplitudes[block][cls] = amps;
    synth_test.amplitudes[block][cls] = amps;
  } else if (key == "model.family") {
    family = model_family_from_string(value);
  } else if (key == "model.feature_set") {
    if (value == "full160") {
      feature_kind = FeatureSet::Kind::full160;
    } else if (value == "pcs") {
      feature_kind = FeatureSet::Kind::pcs;
    } else if (value == "reduced13") {
      feature_kind = FeatureSet::Kind::reduced13;
    } else {
      throw ValidationError("model.feature_set must be full160, pcs or reduced13");
    }
  } else if (key == "model.pc_count") {
    pc_count = static_cast<std::size_t>(detail::parse_long(value, key));
  } else if (key == "model.alpha") {
    alpha = detail::parse_double(value, key);
  } else if (key == "cost.sil") {
    run.train.cost.sil_cost = detail::parse_double(value, key);
  } else if (key == "cost.normal") {
    run.train.cost.normal_cost = detail::parse_double(value, key);
  } else if (key == "cost.threshold") {
    run.train.cost.decision_threshold = detail::parse_double(value, key);
  } else if (key == "sweep.costs") {
    sweep_costs = parse_double_list(value, key);
  } else if (key == "ensemble.pool_size") {
    const long v = detail::parse_long(value, key);
    if (v < 1) throw ValidationError("ensemble.pool_size must be >= 1");
    run.pool_size = static_cast<std::size_t>(v);
  } else if (key == "ensemble.repetitions") {
    const long v = detail::parse_long(value, key);
    if (v < 1) throw ValidationError("ensemble.repetitions must be >= 1");
    run.repetitions = static_cast<std::size_t>(v);
  } else if (key == "ensemble.combiner") {
    if (value != "both" && value != "ave" && value != "med") {
      throw ValidationError("ensemble.combiner must be both, ave or med");
    }
    combiner = value;
  } else if (key == "train.learning_rate") {
    run.train.learning_rate = detail::parse_double(value, key);
  } else if (key == "train.max_epochs") {
    run.train.max_epochs =
        static_cast<std::size_t>(detail::parse_long(value, key));
  } else if (key == "train.stop_patience") {
    run.train.stop_patience =
        static_cast<std::size_t>(detail::parse_long(value, key));
  } else if (key == "train.min_improvement") {
    run.train.min_relative_improvement = detail::parse_double(value, key);
  } else if (key == "seeds.base") {
    run.base_seed = static_cast<std::uint64_t>(detail::parse_long(value, key));
  } else if (key == "report.exclude_inflammation") {
    run.exclude_inflammation = parse_bool(value, key);
  } else if (key == "preprocess.mean_scale") {
    if (value == "per_patient") {
      run.mean_scale_reference = MeanScaleReference::per_patient;
    } else if (value == "global_mean") {
      run.mean_scale_reference = MeanScaleReference::global_mean;
    } else {
      throw ValidationError(
          "preprocess.mean_scale must be per_patient or global_mean");
    }
  } else if (key == "preprocess.normalize_granularity") {
    if (value == "per_excitation") {
      normalize_granularity = NormalizeGranularity::per_excitation;
    } else if (value == "whole_spectrum") {
      normalize_granularity = NormalizeGranularity::whole_spectrum;
    } else {
      throw ValidationError(
          "preprocess.normalize_granularity must be per_excitation or "
          "whole_spectrum");
    }
  } else if (key == "preprocess.normalize_statistic") {
    if (value == "peak") {
      normalize_statistic = NormalizeStatistic::peak;
    } else if (value == "area") {
      normalize_statistic = NormalizeStatistic::area;
    } else {
      throw ValidationError(
          "preprocess.normalize_statistic must be peak or area");
    }
  } else if (key == "reduce.pc_count") {
    reduce_pc_count = static_cast<std::size_t>(detail::parse_long(value, key));
  } else if (key == "reduce.alpha") {
    reduce_alpha = detail::parse_double(value, key);
  } else if (key == "reduce.top_k") {
    if (value.empty() || value == "none") {
      reduce_top_k.reset();
    } else {
      reduce_top_k = static_cast<std::size_t>(detail::parse_long(value, key));
      reduce_threshold.reset();
    }
  } else if (key == "reduce.threshold") {
    if (value.empty() || value == "none") {
      reduce_threshold.reset();
    } else {
      reduce_threshold = detail::parse_double(value, key);
      reduce_top_k.reset();
    }
  } else if (key == "reduce.preprocessing") {
    if (value != "normalized" && value != "normalized_mean_scaled") {
      throw ValidationError(
          "reduce.preprocessing must be normalized or normalized_mean_scaled");
    }
    reduce_preprocessing = value;
  } else {
    throw ValidationError("unknown config key '" + key + "'");
  }
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::to_kv()
    const {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("pipeline", pipeline);
  kv.emplace_back("dataset.source", dataset_source);
  if (!train_path.empty()) kv.emplace_back("dataset.train", train_path.string());
  if (!test_path.empty()) kv.emplace_back("dataset.test", test_path.string());
  kv.emplace_back("output.dir", output_dir.string());

  kv.emplace_back("synth.seed", std::to_string(synth_train.seed));
  kv.emplace_back("synth.test_seed", std::to_string(synth_test.seed));
  kv.emplace_back("synth.train_counts",
                  format_count_list(synth_train.class_counts));
  kv.emplace_back("synth.test_counts",
                  format_count_list(synth_test.class_counts));
  kv.emplace_back("synth.patient_effect",
                  detail::format_double(synth_train.patient_effect_scale));
  kv.emplace_back("synth.site_noise",
                  detail::format_double(synth_train.site_noise_scale));
  kv.emplace_back("synth.sites_per_patient",
                  std::to_string(synth_train.sites_per_patient));
  const auto& grid = WavelengthGrid::standard();
  for (std::size_t b = 0; b < grid.block_count(); ++b) {
    kv.emplace_back("synth.bands." + std::to_string(grid.excitations()[b]),
                    format_bands(synth_train.bands[b]));
    for (Histology h : kAllHistologies) {
      kv.emplace_back(
          "synth.amps." + std::to_string(grid.excitations()[b]) + "." +
              to_string(h),
          format_double_list(
              synth_train.amplitudes[b][static_cast<std::size_t>(h)]));
    }
  }

  kv.emplace_back("model.family", to_string(family));
  kv.emplace_back("model.feature_set",
                  feature_kind == FeatureSet::Kind::full160 ? "full160"
                  : feature_kind == FeatureSet::Kind::pcs  ? "pcs"
                                                           : "reduced13");
  kv.emplace_back("model.pc_count", std::to_string(pc_count));
  kv.emplace_back("model.alpha", detail::format_double(alpha));

  kv.emplace_back("cost.sil", detail::format_double(run.train.cost.sil_cost));
  kv.emplace_back("cost.normal",
                  detail::format_double(run.train.cost.normal_cost));
  kv.emplace_back("cost.threshold",
                  detail::format_double(run.train.cost.decision_threshold));
  kv.emplace_back("sweep.costs", format_double_list(sweep_costs));

  kv.emplace_back("ensemble.pool_size", std::to_string(run.pool_size));
  kv.emplace_back("ensemble.repetitions", std::to_string(run.repetitions));
  kv.emplace_back("ensemble.combiner", combiner);

  kv.emplace_back("train.learning_rate",
                  detail::format_double(run.train.learning_rate));
  kv.emplace_back("train.max_epochs", std::to_string(run.train.max_epochs));
  kv.emplace_back("train.stop_patience",
                  std::to_string(run.train.stop_patience));
  kv.emplace_back("train.min_improvement",
                  detail::format_double(run.train.min_relative_improvement));
  kv.emplace_back("seeds.base", std::to_string(run.base_seed));
  kv.emplace_back("report.exclude_inflammation",
                  run.exclude_inflammation ? "1" : "0");

  kv.emplace_back("preprocess.mean_scale",
                  run.mean_scale_reference == MeanScaleReference::per_patient
                      ? "per_patient"
                      : "global_mean");
  kv.emplace_back("preprocess.normalize_granularity",
                  normalize_granularity == NormalizeGranularity::per_excitation
                      ? "per_excitation"
                      : "whole_spectrum");
  kv.emplace_back("preprocess.normalize_statistic",
                  normalize_statistic == NormalizeStatistic::peak ? "peak"
                                                                  : "area");

  kv.emplace_back("reduce.pc_count", std::to_string(reduce_pc_count));
  kv.emplace_back("reduce.alpha", detail::format_double(reduce_alpha));
  kv.emplace_back("reduce.top_k",
                  reduce_top_k ? std::to_string(*reduce_top_k) : "none");
  kv.emplace_back("reduce.threshold", reduce_threshold
                                          ? detail::format_double(*reduce_threshold)
                                          : "none");
  kv.emplace_back("reduce.preprocessing", reduce_preprocessing);
  return kv;
}

void ExperimentConfig::validate() const {
  run.train.validate();
  if (dataset_source == "file") {
    if (train_path.empty() || test_path.empty()) {
      throw ValidationError(
          "dataset.source = file needs dataset.train and dataset.test paths");
    }
    if (!std::filesystem::exists(train_path)) {
      throw ValidationError("dataset file not found: " + train_path.string());
    }
    if (!std::filesystem::exists(test_path)) {
      throw ValidationError("dataset file not found: " + test_path.string());
    }
  }
  if (sweep_costs.empty()) {
    throw ValidationError("sweep.costs must not be empty");
  }
}

std::vector<std::pair<std::string, std::string>> read_kv_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open config file " + path.string());
  }
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(path.string() + ", line " + std::to_string(line_no) +
                            ": expected 'key = value'");
    }
    pairs.emplace_back(detail::trim(t.substr(0, eq)),
                       detail::trim(t.substr(eq + 1)));
  }
  return pairs;
}

void write_kv_file(
    const std::vector<std::pair<std::string, std::string>>& pairs,
    const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) {
    throw ValidationError("cannot write file " + path.string());
  }
  for (const auto& [key, value] : pairs) {
    out << key << " = " << value << '\n';
  }
  if (!out) {
    throw ValidationError("failed while writing " + path.string());
  }
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  ExperimentConfig cfg = ExperimentConfig::defaults();
  for (const auto& [key, value] : read_kv_file(path)) {
    cfg.apply(key, value);
  }
  return cfg;
}

std::pair<Dataset, Dataset> resolve_datasets(const ExperimentConfig& cfg) {
  if (cfg.dataset_source == "file") {
    cfg.validate();
    Dataset train = load_dataset(cfg.train_path, WavelengthGrid::standard());
    Dataset test = load_dataset(cfg.test_path, WavelengthGrid::standard());
    train.split_tag = SplitTag::train;
    test.split_tag = SplitTag::test;
    return {std::move(train), std::move(test)};
  }
  Dataset train = synthesize_dataset(cfg.synth_train);
  Dataset test = synthesize_dataset(cfg.synth_test);
  train.split_tag = SplitTag::train;
  test.split_tag = SplitTag::test;
  return {std::move(train), std::move(test)};
}

namespace {

void write_manifest(const ExperimentConfig& cfg,
                    const std::filesystem::path& path) {
  write_kv_file(cfg.to_kv(), path);
}

void print_class_tallies(const Dataset& ds, const std::string& name,
                         std::ostream& out) {
  const auto counts = class_counts(ds);
  out << name << ":";
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out << ' ' << to_string(kAllHistologies[i]) << '=' << counts[i];
  }
  out << " total=" << ds.samples.size() << '\n';
}

std::vector<EvalReport> filter_combiner(std::vector<EvalReport> reports,
                                        const std::string& combiner) {
  if (combiner == "both") return reports;
  std::vector<EvalReport> kept;
  for (auto& r : reports) {
    if (r.label.ends_with("-" + combiner) || r.label.ends_with("-single")) {
      kept.push_back(std::move(r));
    }
  }
  return kept;
}

}  // namespace

void cmd_generate(const ExperimentConfig& cfg, std::ostream& out) {
  cfg.validate();
  const Dataset train = synthesize_dataset(cfg.synth_train);
  const Dataset test = synthesize_dataset(cfg.synth_test);
  std::filesystem::create_directories(cfg.output_dir);
  save_dataset(train, cfg.output_dir / "train.csv");
  save_dataset(test, cfg.output_dir / "test.csv");
  write_manifest(cfg, cfg.output_dir / "manifest.txt");
  out << "wrote " << (cfg.output_dir / "train.csv").string() << " and "
      << (cfg.output_dir / "test.csv").string() << '\n';
  print_class_tallies(train, "train", out);
  print_class_tallies(test, "test", out);
}

void cmd_run(const ExperimentConfig& cfg, std::ostream& out) {
  cfg.validate();
  const auto [train, test] = resolve_datasets(cfg);

  std::vector<EvalReport> reports;
  if (cfg.pipeline == "one-step") {
    reports = run_one_step(cfg.run, train, test);
  } else if (cfg.pipeline == "two-step") {
    reports = run_two_step(cfg.run, train, test, cfg.family);
  } else {
    FeatureSet features;
    features.kind = cfg.feature_kind;
    features.pc_count = cfg.pc_count;
    features.alpha = cfg.alpha;
    const auto spec = cfg.pipeline == "constituent1"
                          ? ConstituentSpec::algo1(features, cfg.family)
                          : ConstituentSpec::algo2(features, cfg.family);
    reports = run_constituent(spec, cfg.run, train, test);
  }
  reports = filter_combiner(std::move(reports), cfg.combiner);

  std::filesystem::create_directories(cfg.output_dir);
  write_report_csv(reports, cfg.output_dir / "report.csv");
  const std::string table = render_report_table(reports);
  {
    std::ofstream table_file(cfg.output_dir / "report.txt");
    table_file << table << "\nconfiguration:\n";
    for (const auto& [key, value] : cfg.to_kv()) {
      table_file << "  " << key << " = " << value << '\n';
    }
  }
  write_manifest(cfg, cfg.output_dir / "manifest.txt");
  out << table;
  out << "wrote " << (cfg.output_dir / "report.csv").string() << '\n';
}

void cmd_sweep(const ExperimentConfig& cfg, std::ostream& out) {
  cfg.validate();
  const auto [train, test] = resolve_datasets(cfg);
  const TradeoffCurve curve = cost_sweep(cfg.run, cfg.sweep_costs, train, test);
  std::filesystem::create_directories(cfg.output_dir);
  write_tradeoff_csv(curve, cfg.output_dir / "tradeoff.csv");
  write_tradeoff_plot_data(curve, cfg.output_dir);
  write_manifest(cfg, cfg.output_dir / "manifest.txt");
  out << "wrote " << (cfg.output_dir / "tradeoff.csv").string() << " ("
      << curve.points.size() << " rows)\n";
}

void cmd_reduce_wavelengths(const ExperimentConfig& cfg, std::ostream& out) {
  cfg.validate();
  const auto [train, test] = resolve_datasets(cfg);

  FeatureMatrix fm =
      normalize(train, cfg.normalize_granularity, cfg.normalize_statistic);
  if (cfg.reduce_preprocessing == "normalized_mean_scaled") {
    fm = mean_scale(fm, cfg.run.mean_scale_reference);
  }
  const std::size_t k =
      std::min(cfg.reduce_pc_count, std::min(fm.rows() - 1, fm.cols()));
  const PcaModel model = fit_pca(fm, k);
  const FeatureMatrix scores = project(model, fm, model.component_count());
  const auto selection =
      select_components(scores, sil_targets(fm), cfg.reduce_alpha);
  if (selection.indices.empty()) {
    throw NumericalError(
        "reduce-wavelengths: no significant components at alpha " +
        detail::format_double(cfg.reduce_alpha));
  }
  const LoadingMatrix loadings = component_loadings(model, fm, selection);
  const auto pairs =
      reduce_wavelengths(loadings, cfg.reduce_threshold, cfg.reduce_top_k);

  std::filesystem::create_directories(cfg.output_dir);
  save_loading_matrix(loadings, cfg.output_dir / "loadings.csv");
  write_manifest(cfg, cfg.output_dir / "manifest.txt");

  out << "selected components:";
  for (std::size_t idx : selection.indices) out << " PC" << (idx + 1);
  out << '\n';
  out << "reduced pairs (" << pairs.size() << "):\n";
  for (const auto& p : pairs) {
    out << "  " << p.excitation_nm << ", " << p.emission_nm << " nm\n";
  }
}

void cmd_preprocess(const ExperimentConfig& cfg,
                    const std::filesystem::path& input,
                    const std::filesystem::path& output,
                    const std::string& mode, std::ostream& out) {
  const Dataset ds = load_dataset(input, WavelengthGrid::standard());
  FeatureMatrix fm =
      normalize(ds, cfg.normalize_granularity, cfg.normalize_statistic);
  if (mode == "mean-scale") {
    fm = mean_scale(fm, cfg.run.mean_scale_reference);
  } else if (mode != "normalize") {
    throw ValidationError("preprocess mode must be normalize or mean-scale");
  }
  save_feature_matrix(fm, output);
  out << "wrote " << output.string() << " (" << fm.rows() << " x " << fm.cols()
      << ", " << to_string(fm.tag) << ")\n";
}

void cmd_report(const std::filesystem::path& report_csv, std::ostream& out) {
  std::ifstream in(report_csv);
  if (!in) {
    throw ValidationError("cannot open report file " + report_csv.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw ValidationError(report_csv.string() + " is empty");
  }
  std::vector<EvalReport> reports;
  while (std::getline(in, line)) {
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto fields = detail::split(t, ',');
    if (fields.size() != 5) {
      throw ValidationError(report_csv.string() + ": expected 5 columns");
    }
    EvalReport r;
    r.label = fields[0];
    r.sensitivity.mean = detail::parse_double(fields[1], report_csv.string());
    r.sensitivity.std = detail::parse_double(fields[2], report_csv.string());
    r.specificity.mean = detail::parse_double(fields[3], report_csv.string());
    r.specificity.std = detail::parse_double(fields[4], report_csv.string());
    reports.push_back(std::move(r));
  }
  out << render_report_table(reports);
}

}  // namespace fluorosil
