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

}  // namespace

std::vector<std::vector<double>> kmeans(const FeatureMatrix& points,
                                        std::size_t k, std::uint64_t seed,
                                        std::size_t max_iterations) {
  points.validate();
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  if (k == 0) {
    throw ValidationError("kmeans: k must be >= 1");
  }
  if (k > n) {
    throw ValidationError("kmeans: k = " + std::to_string(k) +
                          " exceeds point count " + std::to_string(n));
  }

  Rng rng(seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);

  std::vector<std::vector<double>> centers(k, std::vector<double>(d));
  for (std::size_t c = 0; c < k; ++c) {
    const auto row = points.row(order[c]);
    std::copy(row.begin(), row.end(), centers[c].begin());
  }

  std::vector<std::size_t> assignment(n, k);
  std::vector<std::size_t> previous(n, k + 1);

  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    // Assignment step; ties go to the lowest center index.
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_c = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double dist = squared_distance(points.row(i), centers[c]);
        if (dist < best) {
          best = dist;
          best_c = c;
        }
      }
      assignment[i] = best_c;
    }
    if (assignment == previous) break;
    previous = assignment;

    // Update step; empty clusters keep their previous center until re-seeded.
    std::vector<std::size_t> counts(k, 0);
    std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = points.row(i);
      auto& sum = sums[assignment[i]];
      for (std::size_t j = 0; j < d; ++j) sum[j] += row[j];
      ++counts[assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < d; ++j) {
        centers[c][j] = sums[c][j] / static_cast<double>(counts[c]);
      }
    }

    // Re-seed empty clusters from the point farthest from its centroid.
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      double worst = -1.0;
      std::size_t worst_i = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[assignment[i]] <= 1) continue;  // keep singletons intact
        const double dist =
            squared_distance(points.row(i), centers[assignment[i]]);
        if (dist > worst) {
          worst = dist;
          worst_i = i;
        }
      }
      if (worst < 0.0) break;  // nothing movable (duplicate-heavy data)
      const auto row = points.row(worst_i);
      std::copy(row.begin(), row.end(), centers[c].begin());
      --counts[assignment[worst_i]];
      assignment[worst_i] = c;
      counts[c] = 1;
    }
  }

  return centers;
}

}  // namespace fluorosil
