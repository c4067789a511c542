#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "detail/text_util.hpp"
#include "fluorosil/errors.hpp"
#include "fluorosil/models.hpp"

namespace fluorosil {

void CostPolicy::validate() const {
  if (!(sil_cost > 0.0) || !std::isfinite(sil_cost) || !(normal_cost > 0.0) ||
      !std::isfinite(normal_cost)) {
    throw ValidationError("cost policy: costs must be finite and positive");
  }
  if (!(decision_threshold > 0.0 && decision_threshold < 1.0)) {
    throw ValidationError("cost policy: decision threshold must lie in (0, 1)");
  }
}

CostPolicy CostPolicy::make(double sil, double normal, double threshold) {
  CostPolicy cost{sil, normal, threshold};
  cost.validate();
  return cost;
}

void TrainConfig::validate() const {
  cost.validate();
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("train config: learning rate must be positive");
  }
  if (max_epochs == 0 || stop_patience == 0) {
    throw ValidationError("train config: epochs and patience must be >= 1");
  }
  if (!(min_relative_improvement > 0.0)) {
    throw ValidationError("train config: min improvement must be positive");
  }
}

Outputs classifier_outputs(const Classifier& model, std::span<const double> x) {
  return std::visit(
      [&](const auto& m) -> Outputs {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LogisticModel>) {
          return logistic_forward(m, x);
        } else if constexpr (std::is_same_v<T, MlpNetwork>) {
          return mlp_forward(m, x);
        } else {
          return rbf_forward(m, x);
        }
      },
      model);
}

Classification classify_outputs(const Outputs& outputs, const CostPolicy& cost) {
  cost.validate();
  const double o_normal = std::clamp(outputs[kNonSilOutput], 0.0, 1.0);
  const double o_sil = std::clamp(outputs[kSilOutput], 0.0, 1.0);
  const double sum = o_normal + o_sil;
  Classification result;
  result.score = sum > 0.0 ? o_sil / sum : 0.5;
  result.sil = result.score >= cost.decision_threshold;
  return result;
}

Classification classify(const Classifier& model, std::span<const double> x,
                        const CostPolicy& cost) {
  return classify_outputs(classifier_outputs(model, x), cost);
}

std::size_t mlp_hidden_units(ModelPreset preset) {
  return preset == ModelPreset::pca3 ? 3 : 10;
}

std::size_t rbf_kernel_count(ModelPreset preset) {
  return preset == ModelPreset::pca3 ? 3 : 10;
}

namespace {

void write_vector(std::ostream& out, std::span<const double> v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    out << (i ? " " : "") << detail::format_double_hex(v[i]);
  }
  out << '\n';
}

std::vector<double> read_vector(const std::string& line, std::size_t expected,
                                const std::string& where) {
  std::istringstream in(line);
  std::vector<double> v;
  std::string token;
  while (in >> token) v.push_back(detail::parse_double_hex(token, where));
  if (v.size() != expected) {
    throw ValidationError(where + ": expected " + std::to_string(expected) +
                          " values, found " + std::to_string(v.size()));
  }
  return v;
}

void write_config(std::ostream& out, const TrainConfig& cfg) {
  out << "config learning_rate " << detail::format_double_hex(cfg.learning_rate)
      << '\n';
  out << "config max_epochs " << cfg.max_epochs << '\n';
  out << "config stop_patience " << cfg.stop_patience << '\n';
  out << "config min_relative_improvement "
      << detail::format_double_hex(cfg.min_relative_improvement) << '\n';
  out << "config seed " << cfg.seed << '\n';
  out << "config sil_cost " << detail::format_double_hex(cfg.cost.sil_cost)
      << '\n';
  out << "config normal_cost " << detail::format_double_hex(cfg.cost.normal_cost)
      << '\n';
  out << "config decision_threshold "
      << detail::format_double_hex(cfg.cost.decision_threshold) << '\n';
}

}  // namespace

void save_classifier(const Classifier& model, const TrainConfig& cfg,
                     const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) {
    throw ValidationError("cannot write model file " + path.string());
  }
  out << "fluorosil-model v1\n";

  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LogisticModel>) {
          out << "family logistic\n";
          out << "inputs " << m.weights.size() << '\n';
          write_config(out, cfg);
          out << "weights ";
          write_vector(out, m.weights);
          out << "bias " << detail::format_double_hex(m.bias) << '\n';
        } else if constexpr (std::is_same_v<T, MlpNetwork>) {
          out << "family mlp\n";
          out << "inputs " << m.input_count() << '\n';
          out << "hidden " << m.hidden_count() << '\n';
          write_config(out, cfg);
          for (std::size_t k = 0; k < m.hidden_count(); ++k) {
            out << "v " << k << ' ';
            write_vector(out, m.input_to_hidden.row(k));
          }
          for (std::size_t j = 0; j < 2; ++j) {
            out << "w " << j << ' ';
            write_vector(out, m.hidden_to_output.row(j));
          }
        } else {
          out << "family rbf\n";
          out << "inputs " << m.input_count() << '\n';
          out << "kernels " << m.kernel_count() << '\n';
          out << "trainable " << (m.kernels_trainable ? 1 : 0) << '\n';
          write_config(out, cfg);
          for (std::size_t c = 0; c < m.kernel_count(); ++c) {
            out << "center " << c << ' ';
            write_vector(out, m.centers[c]);
          }
          out << "widths ";
          write_vector(out, m.widths);
          for (std::size_t j = 0; j < 2; ++j) {
            out << "weights " << j << ' ';
            write_vector(out, m.output_weights.row(j));
          }
        }
      },
      model);
  if (!out) {
    throw ValidationError("failed while writing " + path.string());
  }
}

std::pair<Classifier, TrainConfig> load_classifier(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open model file " + path.string());
  }
  const std::string where = path.string();
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != "fluorosil-model v1") {
    throw ValidationError(where + ": not a fluorosil model file");
  }

  // Header fields up to and including the config block.
  std::string family;
  std::size_t inputs = 0, hidden = 0, kernels = 0;
  bool trainable = true;
  TrainConfig cfg;

  auto take = [&](const std::string& key,
                  const std::string& text) -> std::string {
    if (text.rfind(key + " ", 0) != 0) {
      throw ValidationError(where + ": expected '" + key + "', got '" + text +
                            "'");
    }
    return text.substr(key.size() + 1);
  };

  std::vector<std::string> body;
  while (std::getline(in, line)) {
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    if (t.rfind("family ", 0) == 0) {
      family = t.substr(7);
    } else if (t.rfind("inputs ", 0) == 0) {
      inputs = static_cast<std::size_t>(detail::parse_long(t.substr(7), where));
    } else if (t.rfind("hidden ", 0) == 0) {
      hidden = static_cast<std::size_t>(detail::parse_long(t.substr(7), where));
    } else if (t.rfind("kernels ", 0) == 0) {
      kernels = static_cast<std::size_t>(detail::parse_long(t.substr(8), where));
    } else if (t.rfind("trainable ", 0) == 0) {
      trainable = detail::parse_long(t.substr(10), where) != 0;
    } else if (t.rfind("config ", 0) == 0) {
      const auto rest = t.substr(7);
      const auto sep = rest.find(' ');
      const std::string key = rest.substr(0, sep);
      const std::string val = rest.substr(sep + 1);
      if (key == "learning_rate") {
        cfg.learning_rate = detail::parse_double_hex(val, where);
      } else if (key == "max_epochs") {
        cfg.max_epochs = static_cast<std::size_t>(detail::parse_long(val, where));
      } else if (key == "stop_patience") {
        cfg.stop_patience = static_cast<std::size_t>(detail::parse_long(val, where));
      } else if (key == "min_relative_improvement") {
        cfg.min_relative_improvement = detail::parse_double_hex(val, where);
      } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(detail::parse_long(val, where));
      } else if (key == "sil_cost") {
        cfg.cost.sil_cost = detail::parse_double_hex(val, where);
      } else if (key == "normal_cost") {
        cfg.cost.normal_cost = detail::parse_double_hex(val, where);
      } else if (key == "decision_threshold") {
        cfg.cost.decision_threshold = detail::parse_double_hex(val, where);
      } else {
        throw ValidationError(where + ": unknown config key '" + key + "'");
      }
    } else {
      body.push_back(t);
    }
  }

  std::size_t cursor = 0;
  auto next_line = [&]() -> std::string {
    if (cursor >= body.size()) {
      throw ValidationError(where + ": truncated model file");
    }
    return body[cursor++];
  };

  if (family == "logistic") {
    LogisticModel m;
    m.weights = read_vector(take("weights", next_line()), inputs, where);
    m.bias = detail::parse_double_hex(take("bias", next_line()), where);
    return {m, cfg};
  }
  if (family == "mlp") {
    MlpNetwork m;
    m.input_to_hidden = Matrix(hidden, inputs);
    m.hidden_to_output = Matrix(2, hidden);
    for (std::size_t k = 0; k < hidden; ++k) {
      const auto rest = take("v " + std::to_string(k), next_line());
      const auto v = read_vector(rest, inputs, where);
      std::copy(v.begin(), v.end(), m.input_to_hidden.row(k).begin());
    }
    for (std::size_t j = 0; j < 2; ++j) {
      const auto rest = take("w " + std::to_string(j), next_line());
      const auto v = read_vector(rest, hidden, where);
      std::copy(v.begin(), v.end(), m.hidden_to_output.row(j).begin());
    }
    return {m, cfg};
  }
  if (family == "rbf") {
    RbfNetwork m;
    m.kernels_trainable = trainable;
    for (std::size_t c = 0; c < kernels; ++c) {
      const auto rest = take("center " + std::to_string(c), next_line());
      m.centers.push_back(read_vector(rest, inputs, where));
    }
    m.widths = read_vector(take("widths", next_line()), kernels, where);
    m.output_weights = Matrix(2, kernels);
    for (std::size_t j = 0; j < 2; ++j) {
      const auto rest = take("weights " + std::to_string(j), next_line());
      const auto v = read_vector(rest, kernels, where);
      std::copy(v.begin(), v.end(), m.output_weights.row(j).begin());
    }
    return {m, cfg};
  }
  throw ValidationError(where + ": unknown model family '" + family + "'");
}

}  // namespace fluorosil
