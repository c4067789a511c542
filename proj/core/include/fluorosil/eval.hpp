#ifndef FLUOROSIL_EVAL_HPP
#define FLUOROSIL_EVAL_HPP

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fluorosil {

// Confusion counts with SIL as the positive class.
struct ConfusionCounts {
  std::size_t true_positive = 0;
  std::size_t false_negative = 0;
  std::size_t true_negative = 0;
  std::size_t false_positive = 0;

  std::size_t total() const {
    return true_positive + false_negative + true_negative + false_positive;
  }

  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// Labels are 0 (non-SIL) / 1 (SIL).
ConfusionCounts confusion(const std::vector<int>& predicted,
                          const std::vector<int>& truth);

// (sensitivity %, specificity %). Throws ValidationError when either class
// is absent from the truth.
std::pair<double, double> sens_spec(const ConfusionCounts& counts);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

// Arithmetic mean and sample standard deviation (n-1 denominator; 0 for a
// single value).
MeanStd variability(std::span<const double> values);

// One evaluated configuration: sensitivity/specificity percent over the
// repetition runs plus the complete effective configuration.
struct EvalReport {
  std::string label;
  MeanStd sensitivity;
  MeanStd specificity;
  std::vector<double> sensitivity_runs;
  std::vector<double> specificity_runs;
  std::vector<std::pair<std::string, std::string>> config_echo;
};

EvalReport make_report(std::string label,
                       std::vector<double> sensitivity_runs,
                       std::vector<double> specificity_runs,
                       std::vector<std::pair<std::string, std::string>> echo);

// Published comparison constants for report footers; never merged into
// computed statistics.
struct ReferenceRow {
  std::string name;
  double specificity = 0.0;
  std::optional<double> specificity_std;
  double sensitivity = 0.0;
  std::optional<double> sensitivity_std;
  std::string source;  // "literature"
};

std::span<const ReferenceRow> reference_table();

// report.csv rows: label,sensitivity,sens_std,specificity,spec_std
void write_report_csv(std::span<const EvalReport> reports,
                      const std::filesystem::path& path);

// Aligned text table; literature rows appended as a footer when requested.
std::string render_report_table(std::span<const EvalReport> reports,
                                bool include_reference = true);

}  // namespace fluorosil

#endif
