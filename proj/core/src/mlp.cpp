#include <algorithm>
#include <cmath>
#include <limits>

#include "fluorosil/errors.hpp"
#include "fluorosil/models.hpp"
#include "fluorosil/rng.hpp"

namespace fluorosil {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void forward_pass(const MlpNetwork& net, std::span<const double> x,
                  std::vector<double>& hidden, Outputs& outputs) {
  const std::size_t n_hidden = net.hidden_count();
  hidden.resize(n_hidden);
  for (std::size_t k = 0; k < n_hidden; ++k) {
    double z = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      z += net.input_to_hidden(k, i) * x[i];
    }
    hidden[k] = sigmoid(z);
  }
  for (std::size_t j = 0; j < 2; ++j) {
    double z = 0.0;
    for (std::size_t k = 0; k < n_hidden; ++k) {
      z += net.hidden_to_output(j, k) * hidden[k];
    }
    outputs[j] = sigmoid(z);
  }
}

// Mean cost-weighted squared error; gradients accumulated when given.
double loss_and_gradients(const MlpNetwork& net, const FeatureMatrix& features,
                          const std::vector<int>& sil_targets,
                          const CostPolicy& cost, MlpGradients* grads) {
  const std::size_t n = features.rows();
  const std::size_t n_hidden = net.hidden_count();
  if (grads) {
    grads->input_to_hidden = Matrix(n_hidden, net.input_count());
    grads->hidden_to_output = Matrix(2, n_hidden);
  }
  std::vector<double> hidden;
  Outputs outputs{};
  double loss = 0.0;

  for (std::size_t r = 0; r < n; ++r) {
    const auto x = features.row(r);
    forward_pass(net, x, hidden, outputs);
    const bool sil = sil_targets[r] != 0;
    const double weight = sil ? cost.sil_cost : cost.normal_cost;
    const Outputs target = sil ? Outputs{0.0, 1.0} : Outputs{1.0, 0.0};

    std::array<double, 2> delta_out{};
    for (std::size_t j = 0; j < 2; ++j) {
      const double err = outputs[j] - target[j];
      loss += weight * err * err;
      if (grads) {
        delta_out[j] = 2.0 * weight * err * outputs[j] * (1.0 - outputs[j]) /
                       static_cast<double>(n);
        for (std::size_t k = 0; k < n_hidden; ++k) {
          grads->hidden_to_output(j, k) += delta_out[j] * hidden[k];
        }
      }
    }
    if (grads) {
      for (std::size_t k = 0; k < n_hidden; ++k) {
        const double back = delta_out[0] * net.hidden_to_output(0, k) +
                            delta_out[1] * net.hidden_to_output(1, k);
        const double delta_hidden = back * hidden[k] * (1.0 - hidden[k]);
        for (std::size_t i = 0; i < x.size(); ++i) {
          grads->input_to_hidden(k, i) += delta_hidden * x[i];
        }
      }
    }
  }
  return loss / static_cast<double>(n);
}

}  // namespace

Outputs mlp_forward(const MlpNetwork& net, std::span<const double> x) {
  if (x.size() != net.input_count()) {
    throw ValidationError("mlp_forward: input has " + std::to_string(x.size()) +
                          " values, network expects " +
                          std::to_string(net.input_count()));
  }
  std::vector<double> hidden;
  Outputs outputs{};
  forward_pass(net, x, hidden, outputs);
  return outputs;
}

double mlp_loss(const MlpNetwork& net, const FeatureMatrix& features,
                const std::vector<int>& sil_targets, const CostPolicy& cost) {
  return loss_and_gradients(net, features, sil_targets, cost, nullptr);
}

MlpGradients mlp_loss_gradients(const MlpNetwork& net,
                                const FeatureMatrix& features,
                                const std::vector<int>& sil_targets,
                                const CostPolicy& cost) {
  MlpGradients grads;
  loss_and_gradients(net, features, sil_targets, cost, &grads);
  return grads;
}

MlpNetwork train_mlp(const TrainConfig& cfg, const FeatureMatrix& features,
                     const std::vector<int>& sil_targets,
                     std::size_t hidden_count) {
  cfg.validate();
  features.validate();
  if (sil_targets.size() != features.rows()) {
    throw ValidationError("train_mlp: target count mismatch");
  }
  if (hidden_count == 0) {
    throw ValidationError("train_mlp: hidden_count must be >= 1");
  }
  bool has_sil = false, has_normal = false;
  for (int t : sil_targets) (t != 0 ? has_sil : has_normal) = true;
  if (!has_sil || !has_normal) {
    throw ValidationError("train_mlp: both classes must be present");
  }

  const std::size_t d = features.cols();

  MlpNetwork net;
  net.input_to_hidden = Matrix(hidden_count, d);
  net.hidden_to_output = Matrix(2, hidden_count);
  Rng rng(cfg.seed);
  const double in_scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t k = 0; k < hidden_count; ++k) {
    for (std::size_t i = 0; i < d; ++i) {
      net.input_to_hidden(k, i) = rng.uniform(-in_scale, in_scale);
    }
  }
  const double hid_scale = 1.0 / std::sqrt(static_cast<double>(hidden_count));
  for (std::size_t j = 0; j < 2; ++j) {
    for (std::size_t k = 0; k < hidden_count; ++k) {
      net.hidden_to_output(j, k) = rng.uniform(-hid_scale, hid_scale);
    }
  }

  double previous_loss = std::numeric_limits<double>::infinity();
  std::size_t plateau = 0;
  MlpGradients grads;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double loss =
        loss_and_gradients(net, features, sil_targets, cfg.cost, &grads);
    if (!std::isfinite(loss)) {
      throw NumericalError("train_mlp: non-finite loss at epoch " +
                           std::to_string(epoch) + " (learning rate " +
                           std::to_string(cfg.learning_rate) + ")");
    }

    for (std::size_t idx = 0; idx < grads.input_to_hidden.data().size(); ++idx) {
      net.input_to_hidden.data()[idx] -=
          cfg.learning_rate * grads.input_to_hidden.data()[idx];
    }
    for (std::size_t idx = 0; idx < grads.hidden_to_output.data().size(); ++idx) {
      net.hidden_to_output.data()[idx] -=
          cfg.learning_rate * grads.hidden_to_output.data()[idx];
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
