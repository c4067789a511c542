#include <algorithm>
#include <cmath>
#include <iostream>

#include "fluorosil/errors.hpp"
#include "fluorosil/models.hpp"

namespace fluorosil {

namespace {

// log(1 + e^x) without overflow.
double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double weight_norm(const LogisticModel& m) {
  double s = m.bias * m.bias;
  for (double w : m.weights) s += w * w;
  return std::sqrt(s);
}

// Mean cost-weighted log-likelihood, optionally ridge-penalized.
double objective(const LogisticModel& m, const FeatureMatrix& features,
                 const std::vector<int>& targets, const CostPolicy& cost,
                 double l2) {
  double ll = 0.0;
  for (std::size_t r = 0; r < features.rows(); ++r) {
    const auto x = features.row(r);
    double z = m.bias;
    for (std::size_t i = 0; i < x.size(); ++i) z += m.weights[i] * x[i];
    const bool sil = targets[r] != 0;
    const double weight = sil ? cost.sil_cost : cost.normal_cost;
    // log p = -softplus(-z), log(1-p) = -softplus(z)
    ll -= weight * softplus(sil ? -z : z);
  }
  ll /= static_cast<double>(features.rows());
  if (l2 > 0.0) {
    double s = 0.0;
    for (double w : m.weights) s += w * w;
    ll -= 0.5 * l2 * s;
  }
  return ll;
}

LogisticGradients gradients(const LogisticModel& m, const FeatureMatrix& features,
                            const std::vector<int>& targets,
                            const CostPolicy& cost, double l2) {
  LogisticGradients g;
  g.weights.assign(m.weights.size(), 0.0);
  for (std::size_t r = 0; r < features.rows(); ++r) {
    const auto x = features.row(r);
    double z = m.bias;
    for (std::size_t i = 0; i < x.size(); ++i) z += m.weights[i] * x[i];
    const bool sil = targets[r] != 0;
    const double weight = sil ? cost.sil_cost : cost.normal_cost;
    const double residual = weight * ((sil ? 1.0 : 0.0) - sigmoid(z));
    for (std::size_t i = 0; i < x.size(); ++i) g.weights[i] += residual * x[i];
    g.bias += residual;
  }
  const double n = static_cast<double>(features.rows());
  for (auto& w : g.weights) w /= n;
  g.bias /= n;
  if (l2 > 0.0) {
    for (std::size_t i = 0; i < m.weights.size(); ++i) {
      g.weights[i] -= l2 * m.weights[i];
    }
  }
  return g;
}

double gradient_norm(const LogisticGradients& g) {
  double s = g.bias * g.bias;
  for (double w : g.weights) s += w * w;
  return std::sqrt(s);
}

}  // namespace

Outputs logistic_forward(const LogisticModel& model, std::span<const double> x) {
  if (x.size() != model.weights.size()) {
    throw ValidationError("logistic_forward: input has " +
                          std::to_string(x.size()) + " values, model expects " +
                          std::to_string(model.weights.size()));
  }
  double z = model.bias;
  for (std::size_t i = 0; i < x.size(); ++i) z += model.weights[i] * x[i];
  const double p = sigmoid(z);
  return {1.0 - p, p};
}

double logistic_log_likelihood(const LogisticModel& model,
                               const FeatureMatrix& features,
                               const std::vector<int>& sil_targets,
                               const CostPolicy& cost) {
  return objective(model, features, sil_targets, cost, 0.0);
}

LogisticGradients logistic_gradients(const LogisticModel& model,
                                     const FeatureMatrix& features,
                                     const std::vector<int>& sil_targets,
                                     const CostPolicy& cost) {
  return gradients(model, features, sil_targets, cost, 0.0);
}

LogisticModel train_logistic(const FeatureMatrix& features,
                             const std::vector<int>& sil_targets,
                             const CostPolicy& cost,
                             const LogisticOptions& options) {
  cost.validate();
  features.validate();
  if (sil_targets.size() != features.rows()) {
    throw ValidationError("train_logistic: target count mismatch");
  }
  bool has_sil = false, has_normal = false;
  for (int t : sil_targets) (t != 0 ? has_sil : has_normal) = true;
  if (!has_sil || !has_normal) {
    throw ValidationError("train_logistic: both classes must be present");
  }

  LogisticModel model;
  model.weights.assign(features.cols(), 0.0);

  double l2 = 0.0;
  double step = 1.0;
  double value = objective(model, features, sil_targets, cost, l2);

  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    const auto g = gradients(model, features, sil_targets, cost, l2);
    if (gradient_norm(g) < options.gradient_tolerance) break;

    // Ascent step with backtracking; the objective is concave.
    LogisticModel candidate = model;
    double candidate_value;
    while (true) {
      for (std::size_t i = 0; i < model.weights.size(); ++i) {
        candidate.weights[i] = model.weights[i] + step * g.weights[i];
      }
      candidate.bias = model.bias + step * g.bias;
      candidate_value = objective(candidate, features, sil_targets, cost, l2);
      if (candidate_value >= value || step < 1e-14) break;
      step *= 0.5;
    }
    model = candidate;
    value = candidate_value;
    step = std::min(step * 1.5, 1e6);

    if (l2 == 0.0 && weight_norm(model) > options.separation_norm) {
      // (Near-)perfect separation: the unpenalized optimum is at infinity.
      l2 = options.l2_penalty;
      value = objective(model, features, sil_targets, cost, l2);
      std::cerr << "train_logistic: classes look perfectly separated; "
                   "capping weights with L2 penalty "
                << l2 << "\n";
    }
  }
  return model;
}

}  // namespace fluorosil
