#include "fluorosil/eval.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "detail/text_util.hpp"
#include "fluorosil/errors.hpp"

namespace fluorosil {

ConfusionCounts confusion(const std::vector<int>& predicted,
                          const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) {
    throw ValidationError("confusion: prediction/truth length mismatch (" +
                          std::to_string(predicted.size()) + " vs " +
                          std::to_string(truth.size()) + ")");
  }
  if (predicted.empty()) {
    throw ValidationError("confusion: empty label lists");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool pos = truth[i] != 0;
    const bool pred = predicted[i] != 0;
    if (pos) {
      ++(pred ? c.true_positive : c.false_negative);
    } else {
      ++(pred ? c.false_positive : c.true_negative);
    }
  }
  return c;
}

std::pair<double, double> sens_spec(const ConfusionCounts& counts) {
  const std::size_t positives = counts.true_positive + counts.false_negative;
  const std::size_t negatives = counts.true_negative + counts.false_positive;
  if (positives == 0) {
    throw ValidationError("sens_spec: sensitivity undefined, no SIL samples");
  }
  if (negatives == 0) {
    throw ValidationError("sens_spec: specificity undefined, no non-SIL samples");
  }
  const double sens = 100.0 * static_cast<double>(counts.true_positive) /
                      static_cast<double>(positives);
  const double spec = 100.0 * static_cast<double>(counts.true_negative) /
                      static_cast<double>(negatives);
  return {sens, spec};
}

MeanStd variability(std::span<const double> values) {
  if (values.empty()) {
    throw ValidationError("variability: empty value list");
  }
  MeanStd out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() == 1) return out;
  double ss = 0.0;
  for (double v : values) {
    const double d = v - out.mean;
    ss += d * d;
  }
  out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return out;
}

EvalReport make_report(std::string label, std::vector<double> sensitivity_runs,
                       std::vector<double> specificity_runs,
                       std::vector<std::pair<std::string, std::string>> echo) {
  EvalReport report;
  report.label = std::move(label);
  report.sensitivity = variability(sensitivity_runs);
  report.specificity = variability(specificity_runs);
  report.sensitivity_runs = std::move(sensitivity_runs);
  report.specificity_runs = std::move(specificity_runs);
  report.config_echo = std::move(echo);
  return report;
}

std::span<const ReferenceRow> reference_table() {
  static const std::vector<ReferenceRow> rows = {
      {"Pap smear (human expert)", 68.0, 21.0, 62.0, 23.0, "literature"},
      {"Colposcopy (human expert)", 48.0, 23.0, 94.0, 6.0, "literature"},
      {"2-step MSA", 65.0, std::nullopt, 84.0, std::nullopt, "literature"},
  };
  return rows;
}

namespace {

std::string percent(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(1) << v;
  return out.str();
}

std::string pm(double mean, std::optional<double> std_dev) {
  std::string s = percent(mean) + "%";
  if (std_dev) s += " +- " + percent(*std_dev) + "%";
  return s;
}

}  // namespace

void write_report_csv(std::span<const EvalReport> reports,
                      const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) {
    throw ValidationError("cannot write report file " + path.string());
  }
  out << "label,sensitivity,sens_std,specificity,spec_std\n";
  for (const auto& r : reports) {
    out << r.label << ',' << percent(r.sensitivity.mean) << ','
        << percent(r.sensitivity.std) << ',' << percent(r.specificity.mean)
        << ',' << percent(r.specificity.std) << '\n';
  }
  if (!out) {
    throw ValidationError("failed while writing " + path.string());
  }
}

std::string render_report_table(std::span<const EvalReport> reports,
                                bool include_reference) {
  std::size_t width = 24;
  for (const auto& r : reports) width = std::max(width, r.label.size() + 2);
  if (include_reference) {
    for (const auto& row : reference_table()) {
      width = std::max(width, row.name.size() + 2);
    }
  }

  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "Algorithm"
      << std::setw(20) << "Specificity" << "Sensitivity\n";
  out << std::string(width + 32, '-') << '\n';
  for (const auto& r : reports) {
    out << std::left << std::setw(static_cast<int>(width)) << r.label
        << std::setw(20) << pm(r.specificity.mean, r.specificity.std)
        << pm(r.sensitivity.mean, r.sensitivity.std) << '\n';
  }
  if (include_reference) {
    out << std::string(width + 32, '-') << '\n';
    for (const auto& row : reference_table()) {
      out << std::left << std::setw(static_cast<int>(width)) << row.name
          << std::setw(20) << pm(row.specificity, row.specificity_std)
          << pm(row.sensitivity, row.sensitivity_std) << "  ["
          << row.source << "]\n";
    }
  }
  return out.str();
}

}  // namespace fluorosil
