// fluorosil command-line front end: reproducible experiments driven by a
// flat key-value config file, with every key overridable from the flags.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fluorosil/errors.hpp"
#include "fluorosil/experiment.hpp"

namespace {

fluorosil::ExperimentConfig build_config(const std::string& config_path,
                                         const std::vector<std::string>& sets) {
  fluorosil::ExperimentConfig cfg;
  if (!config_path.empty()) {
    cfg = fluorosil::load_experiment_config(config_path);
  } else {
    cfg = fluorosil::ExperimentConfig::defaults();
  }
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw fluorosil::ValidationError("--set expects key=value, got '" + kv +
                                       "'");
    }
    cfg.apply(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fluorescence spectra SIL screening toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> sets;
  app.add_option("-c,--config", config_path, "key-value config file");
  app.add_option("-s,--set", sets, "override a config key, e.g. -s cost.sil=3");

  std::string output_dir;
  app.add_option("-o,--out", output_dir,
                 "output directory (default $FLUOROSIL_OUT or ./out)");

  auto* generate = app.add_subcommand(
      "generate", "synthesize train/test dataset CSVs plus a manifest");

  auto* preprocess = app.add_subcommand(
      "preprocess", "normalize (and optionally mean-scale) a dataset CSV");
  std::string pp_input, pp_output, pp_mode = "normalize";
  preprocess->add_option("input", pp_input, "dataset CSV")->required();
  preprocess->add_option("output", pp_output, "feature matrix CSV")->required();
  preprocess->add_option("-m,--mode", pp_mode, "normalize | mean-scale");

  auto* reduce = app.add_subcommand(
      "reduce-wavelengths",
      "PCA + t-test + component loadings; prints the reduced pair list");
  std::string reduce_top_k, reduce_threshold;
  reduce->add_option("--top-k", reduce_top_k, "pick the k strongest pairs");
  reduce->add_option("--threshold", reduce_threshold,
                     "pick pairs with max |loading| >= threshold");

  auto* run = app.add_subcommand("run", "train and evaluate a pipeline");
  std::string run_pipeline, run_combiner;
  std::size_t run_pool = 0, run_reps = 0;
  run->add_option("-p,--pipeline", run_pipeline,
                  "constituent1 | constituent2 | two-step | one-step");
  run->add_option("--combiner", run_combiner, "ave | med | both");
  run->add_option("--pool-size", run_pool, "ensemble members per pool");
  run->add_option("--repetitions", run_reps, "pools per experiment");

  auto* sweep = app.add_subcommand(
      "sweep", "cost sweep of the one-step pipeline (tradeoff curve)");
  std::string sweep_costs;
  sweep->add_option("--costs", sweep_costs,
                    "comma-separated SIL misclassification costs");

  auto* report = app.add_subcommand(
      "report", "render a report.csv as an aligned text table");
  std::string report_input;
  report->add_option("input", report_input, "report CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = build_config(config_path, sets);
    if (!output_dir.empty()) cfg.apply("output.dir", output_dir);

    if (generate->parsed()) {
      fluorosil::cmd_generate(cfg, std::cout);
    } else if (preprocess->parsed()) {
      fluorosil::cmd_preprocess(cfg, pp_input, pp_output, pp_mode, std::cout);
    } else if (reduce->parsed()) {
      if (!reduce_top_k.empty()) cfg.apply("reduce.top_k", reduce_top_k);
      if (!reduce_threshold.empty()) {
        cfg.apply("reduce.threshold", reduce_threshold);
      }
      fluorosil::cmd_reduce_wavelengths(cfg, std::cout);
    } else if (run->parsed()) {
      if (!run_pipeline.empty()) cfg.apply("pipeline", run_pipeline);
      if (!run_combiner.empty()) cfg.apply("ensemble.combiner", run_combiner);
      if (run_pool > 0) {
        cfg.apply("ensemble.pool_size", std::to_string(run_pool));
      }
      if (run_reps > 0) {
        cfg.apply("ensemble.repetitions", std::to_string(run_reps));
      }
      fluorosil::cmd_run(cfg, std::cout);
    } else if (sweep->parsed()) {
      if (!sweep_costs.empty()) cfg.apply("sweep.costs", sweep_costs);
      fluorosil::cmd_sweep(cfg, std::cout);
    } else if (report->parsed()) {
      fluorosil::cmd_report(report_input, std::cout);
    }
  } catch (const fluorosil::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const fluorosil::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
