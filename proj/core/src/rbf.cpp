#include <algorithm>
#include <cmath>
#include <limits>

#include "fluorosil/errors.hpp"
#include "fluorosil/models.hpp"
#include "fluorosil/rng.hpp"

namespace fluorosil {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

constexpr double kWidthFloor = 1e-6;

std::vector<double> initial_widths(
    const std::vector<std::vector<double>>& centers,
    const FeatureMatrix& features) {
  const std::size_t k = centers.size();
  std::vector<double> widths(k, kWidthFloor);
  if (k == 1) {
    // Single kernel: fall back to the mean distance to the training points.
    double total = 0.0;
    for (std::size_t r = 0; r < features.rows(); ++r) {
      total += std::sqrt(squared_distance(features.row(r), centers[0]));
    }
    widths[0] =
        std::max(total / static_cast<double>(features.rows()), kWidthFloor);
    return widths;
  }
  for (std::size_t c = 0; c < k; ++c) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t other = 0; other < k; ++other) {
      if (other == c) continue;
      best = std::min(best, squared_distance(centers[c], centers[other]));
    }
    widths[c] = std::max(std::sqrt(best), kWidthFloor);
  }
  return widths;
}

void kernel_activations(const RbfNetwork& net, std::span<const double> x,
                        std::vector<double>& phi) {
  phi.resize(net.kernel_count());
  for (std::size_t j = 0; j < net.kernel_count(); ++j) {
    const double d2 = squared_distance(x, net.centers[j]);
    phi[j] = std::exp(-0.5 * d2 / (net.widths[j] * net.widths[j]));
  }
}

// Mean cost-weighted squared error. When `grads` is given, output-weight
// gradients are always filled; center/width gradients only when
// `kernel_grads` is set. `phi_cache` (n x k) skips re-evaluating frozen
// kernels.
double loss_and_gradients(const RbfNetwork& net, const FeatureMatrix& features,
                          const std::vector<int>& sil_targets,
                          const CostPolicy& cost, const Matrix* phi_cache,
                          RbfGradients* grads, bool kernel_grads) {
  const std::size_t n = features.rows();
  const std::size_t k = net.kernel_count();
  const std::size_t d = features.cols();
  if (grads) {
    grads->output_weights = Matrix(2, k);
    grads->centers.assign(k, std::vector<double>(d, 0.0));
    grads->widths.assign(k, 0.0);
  }

  std::vector<double> phi(k);
  double loss = 0.0;

  for (std::size_t r = 0; r < n; ++r) {
    const auto x = features.row(r);
    if (phi_cache) {
      const auto cached = phi_cache->row(r);
      std::copy(cached.begin(), cached.end(), phi.begin());
    } else {
      kernel_activations(net, x, phi);
    }

    Outputs o{};
    for (std::size_t j = 0; j < 2; ++j) {
      for (std::size_t c = 0; c < k; ++c) {
        o[j] += net.output_weights(j, c) * phi[c];
      }
    }
    const bool sil = sil_targets[r] != 0;
    const double weight = sil ? cost.sil_cost : cost.normal_cost;
    const Outputs target = sil ? Outputs{0.0, 1.0} : Outputs{1.0, 0.0};

    std::array<double, 2> dloss_do{};
    for (std::size_t j = 0; j < 2; ++j) {
      const double err = o[j] - target[j];
      loss += weight * err * err;
      if (grads) {
        dloss_do[j] = 2.0 * weight * err / static_cast<double>(n);
        for (std::size_t c = 0; c < k; ++c) {
          grads->output_weights(j, c) += dloss_do[j] * phi[c];
        }
      }
    }
    if (grads && kernel_grads) {
      for (std::size_t c = 0; c < k; ++c) {
        const double dloss_dphi = dloss_do[0] * net.output_weights(0, c) +
                                  dloss_do[1] * net.output_weights(1, c);
        const double sigma = net.widths[c];
        const double common = dloss_dphi * phi[c];
        double d2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
          const double diff = x[i] - net.centers[c][i];
          d2 += diff * diff;
          grads->centers[c][i] += common * diff / (sigma * sigma);
        }
        grads->widths[c] += common * d2 / (sigma * sigma * sigma);
      }
    }
  }
  return loss / static_cast<double>(n);
}

}  // namespace

double rbf_kernel_activation(const RbfNetwork& net, std::size_t kernel,
                             std::span<const double> x) {
  if (kernel >= net.kernel_count()) {
    throw ValidationError("rbf_kernel_activation: kernel index out of range");
  }
  if (x.size() != net.input_count()) {
    throw ValidationError("rbf_kernel_activation: dimension mismatch");
  }
  const double d2 = squared_distance(x, net.centers[kernel]);
  return std::exp(-0.5 * d2 / (net.widths[kernel] * net.widths[kernel]));
}

Outputs rbf_forward(const RbfNetwork& net, std::span<const double> x) {
  if (x.size() != net.input_count()) {
    throw ValidationError("rbf_forward: input has " + std::to_string(x.size()) +
                          " values, network expects " +
                          std::to_string(net.input_count()));
  }
  std::vector<double> phi;
  kernel_activations(net, x, phi);
  Outputs out{};
  for (std::size_t j = 0; j < 2; ++j) {
    for (std::size_t c = 0; c < phi.size(); ++c) {
      out[j] += net.output_weights(j, c) * phi[c];
    }
  }
  return out;
}

double rbf_loss(const RbfNetwork& net, const FeatureMatrix& features,
                const std::vector<int>& sil_targets, const CostPolicy& cost) {
  return loss_and_gradients(net, features, sil_targets, cost, nullptr, nullptr,
                            false);
}

RbfGradients rbf_loss_gradients(const RbfNetwork& net,
                                const FeatureMatrix& features,
                                const std::vector<int>& sil_targets,
                                const CostPolicy& cost) {
  RbfGradients grads;
  loss_and_gradients(net, features, sil_targets, cost, nullptr, &grads, true);
  return grads;
}

RbfNetwork train_rbf(const TrainConfig& cfg, const FeatureMatrix& features,
                     const std::vector<int>& sil_targets,
                     const RbfInitPolicy& init) {
  cfg.validate();
  features.validate();
  if (sil_targets.size() != features.rows()) {
    throw ValidationError("train_rbf: target count mismatch");
  }
  const std::size_t k = init.kernel_count;
  if (k == 0) {
    throw ValidationError("train_rbf: kernel count must be >= 1");
  }
  if (k > features.rows()) {
    throw ValidationError("train_rbf: kernel count " + std::to_string(k) +
                          " exceeds training rows " +
                          std::to_string(features.rows()));
  }

  Rng rng(cfg.seed);

  RbfNetwork net;
  net.kernels_trainable = init.kernels_trainable;

  switch (init.kind) {
    case RbfInitPolicy::Kind::kmeans_all: {
      net.centers = kmeans(features, k, rng.next_u64());
      break;
    }
    case RbfInitPolicy::Kind::half_fixed_to_class: {
      std::vector<std::size_t> class_rows;
      for (std::size_t r = 0; r < features.rows(); ++r) {
        if (features.row_keys[r].histology == init.fixed_class) {
          class_rows.push_back(r);
        }
      }
      const std::size_t n_fixed = k / 2;
      if (class_rows.size() < n_fixed) {
        throw ValidationError("train_rbf: class " + to_string(init.fixed_class) +
                              " has " + std::to_string(class_rows.size()) +
                              " rows, need " + std::to_string(n_fixed) +
                              " fixed kernels");
      }
      rng.shuffle(class_rows);
      class_rows.resize(n_fixed);
      std::sort(class_rows.begin(), class_rows.end());
      for (std::size_t row : class_rows) {
        const auto values = features.row(row);
        net.centers.emplace_back(values.begin(), values.end());
      }
      const auto rest = kmeans(features, k - n_fixed, rng.next_u64());
      net.centers.insert(net.centers.end(), rest.begin(), rest.end());
      break;
    }
    case RbfInitPolicy::Kind::kmeans_on_trimmed: {
      if (!init.init_points) {
        throw ValidationError(
            "train_rbf: kmeans_on_trimmed needs init_points (the trimmed set)");
      }
      if (init.init_points->cols() != features.cols()) {
        throw ValidationError("train_rbf: init_points dimension mismatch");
      }
      net.centers = kmeans(*init.init_points, k, rng.next_u64());
      break;
    }
  }

  net.widths = initial_widths(net.centers, features);
  net.output_weights = Matrix(2, k);
  const double w_scale = 1.0 / std::sqrt(static_cast<double>(k));
  for (std::size_t j = 0; j < 2; ++j) {
    for (std::size_t c = 0; c < k; ++c) {
      net.output_weights(j, c) = rng.uniform(-w_scale, w_scale);
    }
  }

  const std::size_t n = features.rows();
  const bool adjust_kernels = init.kernels_trainable;

  // With frozen kernels the activations never change; compute them once.
  Matrix phi_cache;
  if (!adjust_kernels) {
    phi_cache = Matrix(n, k);
    std::vector<double> phi;
    for (std::size_t r = 0; r < n; ++r) {
      kernel_activations(net, features.row(r), phi);
      std::copy(phi.begin(), phi.end(), phi_cache.row(r).begin());
    }
  }

  double previous_loss = std::numeric_limits<double>::infinity();
  std::size_t plateau = 0;
  RbfGradients grads;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double loss = loss_and_gradients(
        net, features, sil_targets, cfg.cost,
        adjust_kernels ? nullptr : &phi_cache, &grads, adjust_kernels);
    if (!std::isfinite(loss)) {
      throw NumericalError("train_rbf: non-finite loss at epoch " +
                           std::to_string(epoch) + " (learning rate " +
                           std::to_string(cfg.learning_rate) + ")");
    }

    for (std::size_t idx = 0; idx < grads.output_weights.data().size(); ++idx) {
      net.output_weights.data()[idx] -=
          cfg.learning_rate * grads.output_weights.data()[idx];
    }
    if (adjust_kernels) {
      for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < features.cols(); ++i) {
          net.centers[c][i] -= cfg.learning_rate * grads.centers[c][i];
        }
        net.widths[c] = std::max(
            net.widths[c] - cfg.learning_rate * grads.widths[c], kWidthFloor);
      }
    }

    const double improvement =
        std::isfinite(previous_loss)
            ? (previous_loss - loss) / std::max(previous_loss, 1e-300)
            : 1.0;
    plateau = improvement < cfg.min_relative_improvement ? plateau + 1 : 0;
    previous_loss = loss;
    if (plateau >= cfg.stop_patience) break;
  }

  return net;
}

}  // namespace fluorosil
