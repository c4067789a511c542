#ifndef FLUOROSIL_MODELS_HPP
#define FLUOROSIL_MODELS_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fluorosil/matrix.hpp"
#include "fluorosil/preprocess.hpp"

namespace fluorosil {

// Per-class misclassification costs used as loss weights, plus the decision
// threshold applied to the normalized SIL score.
struct CostPolicy {
  double sil_cost = 1.0;
  double normal_cost = 1.0;
  double decision_threshold = 0.5;

  // Throws ValidationError unless costs are finite and positive and the
  // threshold lies in (0, 1).
  void validate() const;
  static CostPolicy make(double sil, double normal, double threshold = 0.5);

  friend bool operator==(const CostPolicy&, const CostPolicy&) = default;
};

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t max_epochs = 2000;
  // Stop after `stop_patience` consecutive epochs whose relative training
  // loss improvement is below `min_relative_improvement`.
  std::size_t stop_patience = 25;
  double min_relative_improvement = 1e-5;
  std::uint64_t seed = 0;
  CostPolicy cost;

  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Classifier outputs are two class scores: index 0 = non-SIL, 1 = SIL.
inline constexpr std::size_t kNonSilOutput = 0;
inline constexpr std::size_t kSilOutput = 1;
using Outputs = std::array<double, 2>;

struct LogisticModel {
  std::vector<double> weights;
  double bias = 0.0;

  friend bool operator==(const LogisticModel&, const LogisticModel&) = default;
};

// Single-hidden-layer perceptron without bias terms; logistic sigmoid on
// both layers. input_to_hidden is hidden x input, hidden_to_output is
// 2 x hidden.
struct MlpNetwork {
  Matrix input_to_hidden;
  Matrix hidden_to_output;

  std::size_t input_count() const { return input_to_hidden.cols(); }
  std::size_t hidden_count() const { return input_to_hidden.rows(); }

  friend bool operator==(const MlpNetwork&, const MlpNetwork&) = default;
};

// Gaussian-kernel network. Kernel j responds with
// exp(-|x - center_j|^2 / (2 width_j^2)); the two outputs are weighted sums
// of the kernel responses.
struct RbfNetwork {
  std::vector<std::vector<double>> centers;
  std::vector<double> widths;
  Matrix output_weights;  // 2 x kernel count
  bool kernels_trainable = true;

  std::size_t kernel_count() const { return centers.size(); }
  std::size_t input_count() const {
    return centers.empty() ? 0 : centers.front().size();
  }

  friend bool operator==(const RbfNetwork&, const RbfNetwork&) = default;
};

using Classifier = std::variant<LogisticModel, MlpNetwork, RbfNetwork>;

// ---- k-means ------------------------------------------------------------

// Lloyd's iteration to an assignment fixed point (or the iteration cap).
// Deterministic for a fixed seed; empty clusters are re-seeded from the
// point farthest from its current centroid.
std::vector<std::vector<double>> kmeans(const FeatureMatrix& points,
                                        std::size_t k, std::uint64_t seed,
                                        std::size_t max_iterations = 200);

// ---- forward passes ------------------------------------------------------

double rbf_kernel_activation(const RbfNetwork& net, std::size_t kernel,
                             std::span<const double> x);
Outputs rbf_forward(const RbfNetwork& net, std::span<const double> x);
Outputs mlp_forward(const MlpNetwork& net, std::span<const double> x);
Outputs logistic_forward(const LogisticModel& model, std::span<const double> x);
Outputs classifier_outputs(const Classifier& model, std::span<const double> x);

// ---- training ------------------------------------------------------------

// Full-batch gradient descent on the cost-weighted mean squared error
// (each sample's squared error scaled by its class cost). Throws
// NumericalError naming the epoch and learning rate if the loss leaves the
// finite range.
MlpNetwork train_mlp(const TrainConfig& cfg, const FeatureMatrix& features,
                     const std::vector<int>& sil_targets,
                     std::size_t hidden_count);

struct RbfInitPolicy {
  enum class Kind {
    kmeans_all,           // k-means over the whole training matrix
    half_fixed_to_class,  // floor(k/2) kernels verbatim from `fixed_class`,
                          // the rest k-means over the whole matrix
    kmeans_on_trimmed,    // k-means over caller-provided `init_points`
  };

  Kind kind = Kind::kmeans_all;
  std::size_t kernel_count = 10;
  bool kernels_trainable = true;
  Histology fixed_class = Histology::NormalColumnar;
  std::optional<FeatureMatrix> init_points;
};

// Kernel widths start at the distance to the nearest other center (floored
// at 1e-6). With kernels_trainable centers and widths follow the gradient
// together with the output weights; otherwise only the output weights move.
RbfNetwork train_rbf(const TrainConfig& cfg, const FeatureMatrix& features,
                     const std::vector<int>& sil_targets,
                     const RbfInitPolicy& init);

struct LogisticOptions {
  std::size_t max_iterations = 200000;
  double gradient_tolerance = 1e-8;
  // Weight-norm level that triggers the L2 cap (perfect separation guard).
  double separation_norm = 50.0;
  double l2_penalty = 1e-3;
};

// Gradient ascent on the cost-weighted mean log-likelihood. On (near)
// perfect separation the weights are capped by an L2 penalty and a warning
// is printed.
LogisticModel train_logistic(const FeatureMatrix& features,
                             const std::vector<int>& sil_targets,
                             const CostPolicy& cost,
                             const LogisticOptions& options = {});

// Cost-weighted training losses and their analytic gradients. The trainers
// step along exactly these gradients, so a finite-difference check of the
// gradient functions covers the training path.
double mlp_loss(const MlpNetwork& net, const FeatureMatrix& features,
                const std::vector<int>& sil_targets, const CostPolicy& cost);
double rbf_loss(const RbfNetwork& net, const FeatureMatrix& features,
                const std::vector<int>& sil_targets, const CostPolicy& cost);
double logistic_log_likelihood(const LogisticModel& model,
                               const FeatureMatrix& features,
                               const std::vector<int>& sil_targets,
                               const CostPolicy& cost);

struct MlpGradients {
  Matrix input_to_hidden;
  Matrix hidden_to_output;
};
MlpGradients mlp_loss_gradients(const MlpNetwork& net,
                                const FeatureMatrix& features,
                                const std::vector<int>& sil_targets,
                                const CostPolicy& cost);

struct RbfGradients {
  std::vector<std::vector<double>> centers;
  std::vector<double> widths;
  Matrix output_weights;
};
RbfGradients rbf_loss_gradients(const RbfNetwork& net,
                                const FeatureMatrix& features,
                                const std::vector<int>& sil_targets,
                                const CostPolicy& cost);

// Gradient of the mean cost-weighted log-likelihood (ascent direction).
struct LogisticGradients {
  std::vector<double> weights;
  double bias = 0.0;
};
LogisticGradients logistic_gradients(const LogisticModel& model,
                                     const FeatureMatrix& features,
                                     const std::vector<int>& sil_targets,
                                     const CostPolicy& cost);

// ---- decision ------------------------------------------------------------

struct Classification {
  bool sil = false;
  double score = 0.0;  // normalized SIL score in [0, 1]
};

// Clamps the two outputs to [0, 1] and normalizes by their sum (0.5 when the
// sum vanishes); the sample is SIL iff score >= decision_threshold.
Classification classify_outputs(const Outputs& outputs, const CostPolicy& cost);
Classification classify(const Classifier& model, std::span<const double> x,
                        const CostPolicy& cost);

// ---- presets and serialization -------------------------------------------

// Network sizes tied to the two published experiment settings: 3 hidden
// units / kernels on principal-component inputs, 10 on the reduced
// wavelength sets.
enum class ModelPreset { pca3, reduced13 };
std::size_t mlp_hidden_units(ModelPreset preset);
std::size_t rbf_kernel_count(ModelPreset preset);

// Versioned text format; parameters round-trip bit-exactly.
void save_classifier(const Classifier& model, const TrainConfig& cfg,
                     const std::filesystem::path& path);
std::pair<Classifier, TrainConfig> load_classifier(
    const std::filesystem::path& path);

}  // namespace fluorosil

#endif
