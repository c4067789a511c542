#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fluorosil/dimred.hpp"
#include "fluorosil/errors.hpp"
#include "fluorosil/rng.hpp"

using namespace fluorosil;

namespace {

FeatureMatrix matrix_from(const std::vector<std::vector<double>>& rows) {
  FeatureMatrix fm;
  fm.tag = PreprocessingTag::normalized;
  const std::size_t cols = rows.front().size();
  fm.values = Matrix(rows.size(), cols);
  for (std::size_t c = 0; c < cols; ++c) {
    fm.column_labels.push_back(
        ColumnLabel::for_pair({337, 400 + 5 * static_cast<int>(c)},
                              PreprocessingTag::normalized));
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    fm.row_keys.push_back({"p" + std::to_string(r), "s",
                           r % 2 ? Histology::HighGradeSil
                                 : Histology::NormalSquamous});
    for (std::size_t c = 0; c < cols; ++c) fm.values(r, c) = rows[r][c];
  }
  return fm;
}

FeatureMatrix random_matrix(std::size_t rows, std::size_t cols,
                            std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> data(rows, std::vector<double>(cols));
  for (auto& row : data) {
    for (auto& v : row) v = rng.uniform(-1.0, 1.0);
  }
  return matrix_from(data);
}

// Closed-form eigendecomposition of the 2x2 sample covariance; returns the
// leading eigenvector with the sign convention applied.
std::array<double, 2> leading_eigenvector_2x2(const FeatureMatrix& fm) {
  const std::size_t n = fm.rows();
  double mx = 0.0, my = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    mx += fm.at(r, 0);
    my += fm.at(r, 1);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double a = 0.0, b = 0.0, c = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double dx = fm.at(r, 0) - mx;
    const double dy = fm.at(r, 1) - my;
    a += dx * dx;
    b += dx * dy;
    c += dy * dy;
  }
  a /= static_cast<double>(n - 1);
  b /= static_cast<double>(n - 1);
  c /= static_cast<double>(n - 1);
  const double lambda = 0.5 * (a + c + std::sqrt((a - c) * (a - c) + 4 * b * b));
  double vx = b, vy = lambda - a;
  if (b == 0.0) {
    vx = a >= c ? 1.0 : 0.0;
    vy = a >= c ? 0.0 : 1.0;
  }
  const double norm = std::sqrt(vx * vx + vy * vy);
  vx /= norm;
  vy /= norm;
  if (std::fabs(vx) >= std::fabs(vy) ? vx < 0.0 : vy < 0.0) {
    vx = -vx;
    vy = -vy;
  }
  return {vx, vy};
}

// Student's t density with dof nu.
double t_density(double x, double nu) {
  const double ln = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                    0.5 * std::log(nu * 3.14159265358979323846) -
                    0.5 * (nu + 1.0) * std::log1p(x * x / nu);
  return std::exp(ln);
}

// Upper-tail probability P(T >= t) by Simpson quadrature on [t, t + 80].
double t_upper_tail_quadrature(double t, double nu) {
  const double hi = t + 80.0;
  const std::size_t steps = 200000;  // even
  const double h = (hi - t) / static_cast<double>(steps);
  double sum = t_density(t, nu) + t_density(hi, nu);
  for (std::size_t i = 1; i < steps; ++i) {
    const double x = t + h * static_cast<double>(i);
    sum += (i % 2 ? 4.0 : 2.0) * t_density(x, nu);
  }
  return sum * h / 3.0;
}

}  // namespace

TEST_CASE("PCA recovers a planted 2-D principal direction") {
  Rng rng(99);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 400; ++i) {
    const double t = rng.normal();
    const double o = 0.05 * rng.normal();
    // Direction (1,1)/sqrt(2) plus small orthogonal noise.
    rows.push_back({t - o, t + o});
  }
  const FeatureMatrix fm = matrix_from(rows);
  const PcaModel model = fit_pca(fm, 2);

  const auto expected = leading_eigenvector_2x2(fm);
  CHECK(model.components(0, 0) == doctest::Approx(expected[0]).epsilon(1e-9));
  CHECK(model.components(1, 0) == doctest::Approx(expected[1]).epsilon(1e-9));
  CHECK(model.components(0, 0) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-3));
  CHECK(model.components(1, 0) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-3));
}

TEST_CASE("components are orthonormal and conserve variance") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const FeatureMatrix fm = random_matrix(30, 6, seed);
    const PcaModel model = fit_pca(fm, 6);

    for (std::size_t i = 0; i < model.component_count(); ++i) {
      for (std::size_t j = 0; j < model.component_count(); ++j) {
        double dot = 0.0;
        for (std::size_t f = 0; f < 6; ++f) {
          dot += model.components(f, i) * model.components(f, j);
        }
        CHECK(std::fabs(dot - (i == j ? 1.0 : 0.0)) < 1e-10);
      }
    }

    double total_variance = 0.0;
    for (std::size_t c = 0; c < 6; ++c) {
      double mean = 0.0;
      for (std::size_t r = 0; r < fm.rows(); ++r) mean += fm.at(r, c);
      mean /= static_cast<double>(fm.rows());
      double ss = 0.0;
      for (std::size_t r = 0; r < fm.rows(); ++r) {
        const double d = fm.at(r, c) - mean;
        ss += d * d;
      }
      total_variance += ss / static_cast<double>(fm.rows() - 1);
    }
    double eig_sum = 0.0;
    for (double ev : model.eigenvalues) eig_sum += ev;
    CHECK(std::fabs(eig_sum - total_variance) < 1e-8);

    double ratio_sum = 0.0;
    for (double r : model.explained_variance_ratio) ratio_sum += r;
    CHECK(ratio_sum <= 1.0 + 1e-12);
  }
}

TEST_CASE("eigenvalues are sorted descending and non-negative") {
  const FeatureMatrix fm = random_matrix(40, 8, 3);
  const PcaModel model = fit_pca(fm, 7);
  for (std::size_t k = 0; k < model.eigenvalues.size(); ++k) {
    CHECK(model.eigenvalues[k] >= 0.0);
    if (k > 0) CHECK(model.eigenvalues[k] <= model.eigenvalues[k - 1]);
  }
}

TEST_CASE("a constant column loads zero on every retained component") {
  Rng rng(4);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 25; ++i) {
    rows.push_back({rng.normal(), 3.5, rng.normal(), rng.normal()});
  }
  const PcaModel model = fit_pca(matrix_from(rows), 3);
  for (std::size_t k = 0; k < model.component_count(); ++k) {
    CHECK(std::fabs(model.components(1, k)) < 1e-10);
  }
}

TEST_CASE("projection with all components reconstructs the data") {
  const FeatureMatrix fm = random_matrix(24, 5, 8);
  const PcaModel model = fit_pca(fm, 5);
  const FeatureMatrix scores = project(model, fm, model.component_count());
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    for (std::size_t f = 0; f < fm.cols(); ++f) {
      double rec = model.mean[f];
      for (std::size_t k = 0; k < model.component_count(); ++k) {
        rec += scores.at(r, k) * model.components(f, k);
      }
      CHECK(std::fabs(rec - fm.at(r, f)) < 1e-8);
    }
  }
}

TEST_CASE("training scores are centered with diagonal covariance") {
  const FeatureMatrix fm = random_matrix(40, 6, 12);
  const PcaModel model = fit_pca(fm, 5);
  const FeatureMatrix scores = project(model, fm, 5);

  for (std::size_t c = 0; c < scores.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < scores.rows(); ++r) mean += scores.at(r, c);
    mean /= static_cast<double>(scores.rows());
    CHECK(std::fabs(mean) < 1e-10);
  }

  // Direct covariance computation.
  for (std::size_t i = 0; i < scores.cols(); ++i) {
    for (std::size_t j = i + 1; j < scores.cols(); ++j) {
      double cov = 0.0;
      for (std::size_t r = 0; r < scores.rows(); ++r) {
        cov += scores.at(r, i) * scores.at(r, j);
      }
      cov /= static_cast<double>(scores.rows() - 1);
      CHECK(std::fabs(cov) < 1e-8);
    }
  }
}

TEST_CASE("projection edge cases") {
  const FeatureMatrix fm = random_matrix(10, 4, 2);
  const PcaModel model = fit_pca(fm, 3);

  const FeatureMatrix zero = project(model, fm, 0);
  CHECK(zero.cols() == 0);
  CHECK(zero.rows() == fm.rows());

  CHECK_THROWS_AS(project(model, fm, 4), ValidationError);
  const FeatureMatrix wrong = random_matrix(10, 5, 2);
  CHECK_THROWS_AS(project(model, wrong, 2), ValidationError);

  CHECK_THROWS_AS(fit_pca(fm, 0), ValidationError);
  CHECK_THROWS_AS(fit_pca(fm, 5), ValidationError);
}

TEST_CASE("PCA is deterministic, including component signs") {
  const FeatureMatrix fm = random_matrix(30, 6, 77);
  const PcaModel a = fit_pca(fm, 4);
  const PcaModel b = fit_pca(fm, 4);
  CHECK(a.components == b.components);
  for (std::size_t k = 0; k < a.component_count(); ++k) {
    double largest = 0.0;
    for (std::size_t f = 0; f < 6; ++f) {
      if (std::fabs(a.components(f, k)) > std::fabs(largest)) {
        largest = a.components(f, k);
      }
    }
    CHECK(largest > 0.0);
  }
}

TEST_CASE("student_t_cdf matches numeric integration of the density") {
  for (const auto& [t, nu] : std::vector<std::pair<double, double>>{
           {0.5, 5.0}, {1.3, 12.0}, {2.1, 38.0}, {3.7, 7.0}, {0.0, 20.0}}) {
    const double upper = 1.0 - student_t_cdf(t, nu);
    const double oracle = t_upper_tail_quadrature(t, nu);
    CHECK(upper == doctest::Approx(oracle).epsilon(1e-8));
  }
  CHECK(student_t_cdf(0.0, 9.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(student_t_cdf(1.0, 0.0), ValidationError);
}

TEST_CASE("t-test selection separates the obvious from the null") {
  // 40 rows; PC0 perfectly separated, PC1 identical distributions.
  std::vector<std::vector<double>> rows;
  Rng rng(5);
  for (int i = 0; i < 40; ++i) {
    const bool sil = i % 2 == 1;
    rows.push_back({(sil ? 10.0 : 0.0) + 1e-3 * rng.normal(),
                    (i / 2 % 2) ? 1.0 : -1.0});
  }
  FeatureMatrix scores = matrix_from(rows);
  scores.column_labels = {ColumnLabel::for_component(1),
                          ColumnLabel::for_component(2)};
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) labels.push_back(i % 2);

  const auto sel = select_components(scores, labels, 0.05);
  REQUIRE(sel.p_values.size() == 2);
  CHECK(sel.p_values[0] < 1e-6);
  CHECK(sel.p_values[1] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(sel.indices == std::vector<std::size_t>{0});
}

TEST_CASE("t-test p-value matches a hand-computed statistic") {
  // Two small samples; pooled-variance t computed by hand below.
  const std::vector<double> sil = {2.1, 2.5, 1.9, 2.4};
  const std::vector<double> normal = {1.2, 1.6, 1.1, 1.5, 1.4};

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (double v : sil) {
    rows.push_back({v});
    labels.push_back(1);
  }
  for (double v : normal) {
    rows.push_back({v});
    labels.push_back(0);
  }
  FeatureMatrix scores = matrix_from(rows);
  scores.column_labels = {ColumnLabel::for_component(1)};

  const auto sel = select_components(scores, labels, 0.05);

  const double m1 = (2.1 + 2.5 + 1.9 + 2.4) / 4.0;
  const double m0 = (1.2 + 1.6 + 1.1 + 1.5 + 1.4) / 5.0;
  double ss1 = 0.0;
  for (double v : sil) ss1 += (v - m1) * (v - m1);
  double ss0 = 0.0;
  for (double v : normal) ss0 += (v - m0) * (v - m0);
  const double sp2 = (ss1 + ss0) / 7.0;
  const double t = (m1 - m0) / std::sqrt(sp2 * (1.0 / 4.0 + 1.0 / 5.0));
  const double oracle = t_upper_tail_quadrature(std::fabs(t), 7.0);

  CHECK(sel.p_values[0] == doctest::Approx(oracle).epsilon(1e-7));
  CHECK(sel.indices == std::vector<std::size_t>{0});
}

TEST_CASE("shrinking alpha never adds components") {
  const FeatureMatrix fm = random_matrix(60, 5, 21);
  const PcaModel model = fit_pca(fm, 5);
  const FeatureMatrix scores = project(model, fm, 5);
  std::vector<int> labels;
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    labels.push_back(is_sil(fm.row_keys[r].histology) ? 1 : 0);
  }

  std::vector<std::size_t> previous;
  bool first = true;
  for (double alpha : {0.5, 0.2, 0.05, 0.01, 0.001}) {
    const auto sel = select_components(scores, labels, alpha);
    if (!first) {
      CHECK(std::includes(previous.begin(), previous.end(),
                          sel.indices.begin(), sel.indices.end()));
    }
    previous = sel.indices;
    first = false;
  }
}

TEST_CASE("t-test rejects degenerate classes and alphas") {
  const FeatureMatrix fm = random_matrix(10, 2, 30);
  std::vector<int> one_sil(10, 0);
  one_sil[0] = 1;
  CHECK_THROWS_AS(select_components(fm, one_sil, 0.05), ValidationError);
  std::vector<int> labels(10, 0);
  for (int i = 0; i < 5; ++i) labels[i] = 1;
  CHECK_THROWS_AS(select_components(fm, labels, 0.0), ValidationError);
  CHECK_THROWS_AS(select_components(fm, labels, 1.0), ValidationError);
}

TEST_CASE("loadings hit +-1 for columns aligned with a component") {
  // Rank-1 data: column 0 = t, column 1 = -t, column 2 = 2t + tiny noise.
  Rng rng(6);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 30; ++i) {
    const double t = rng.normal();
    rows.push_back({t, -t, 2.0 * t + 1e-9 * rng.normal()});
  }
  const FeatureMatrix fm = matrix_from(rows);
  const PcaModel model = fit_pca(fm, 2);
  ComponentSelection sel;
  sel.indices = {0};
  sel.p_values = {0.0, 1.0};
  sel.alpha = 0.05;
  const LoadingMatrix loadings = component_loadings(model, fm, sel);

  const double l0 = loadings.values(0, 0);
  const double l1 = loadings.values(1, 0);
  CHECK(std::fabs(std::fabs(l0) - 1.0) < 1e-10);
  CHECK(std::fabs(std::fabs(l1) - 1.0) < 1e-10);
  CHECK(l0 * l1 < 0.0);  // opposite-signed columns load with opposite signs
}

TEST_CASE("loadings match an independent correlation computation") {
  const FeatureMatrix fm = random_matrix(5, 4, 17);
  const PcaModel model = fit_pca(fm, 3);
  ComponentSelection sel;
  sel.indices = {0, 2};
  sel.p_values = {0.0, 0.5, 0.01};
  sel.alpha = 0.05;
  const LoadingMatrix loadings = component_loadings(model, fm, sel);
  const FeatureMatrix scores = project(model, fm, 3);

  for (std::size_t f = 0; f < fm.cols(); ++f) {
    for (std::size_t k = 0; k < sel.indices.size(); ++k) {
      const std::size_t c = sel.indices[k];
      double fmean = 0.0, smean = 0.0;
      for (std::size_t r = 0; r < fm.rows(); ++r) {
        fmean += fm.at(r, f);
        smean += scores.at(r, c);
      }
      fmean /= static_cast<double>(fm.rows());
      smean /= static_cast<double>(fm.rows());
      double cross = 0.0, fss = 0.0, sss = 0.0;
      for (std::size_t r = 0; r < fm.rows(); ++r) {
        const double df = fm.at(r, f) - fmean;
        const double ds = scores.at(r, c) - smean;
        cross += df * ds;
        fss += df * df;
        sss += ds * ds;
      }
      const double expected = cross / std::sqrt(fss * sss);
      CHECK(loadings.values(f, k) ==
            doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("loading magnitudes never exceed 1") {
  for (std::uint64_t seed = 50; seed < 60; ++seed) {
    const FeatureMatrix fm = random_matrix(20, 6, seed);
    const PcaModel model = fit_pca(fm, 4);
    ComponentSelection sel;
    sel.indices = {0, 1, 2, 3};
    sel.p_values = {0, 0, 0, 0};
    const LoadingMatrix loadings = component_loadings(model, fm, sel);
    for (std::size_t f = 0; f < fm.cols(); ++f) {
      for (std::size_t k = 0; k < 4; ++k) {
        CHECK(std::fabs(loadings.values(f, k)) <= 1.0 + 1e-12);
      }
    }
  }
}

TEST_CASE("zero-variance features get loading 0") {
  Rng rng(9);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 12; ++i) {
    rows.push_back({rng.normal(), 7.0, rng.normal()});
  }
  const FeatureMatrix fm = matrix_from(rows);
  const PcaModel model = fit_pca(fm, 2);
  ComponentSelection sel;
  sel.indices = {0};
  sel.p_values = {0.0, 0.0};
  const LoadingMatrix loadings = component_loadings(model, fm, sel);
  CHECK(loadings.values(1, 0) == 0.0);
}

TEST_CASE("reduce_wavelengths top_k and threshold behave as documented") {
  const FeatureMatrix fm = random_matrix(40, 20, 13);
  const PcaModel model = fit_pca(fm, 5);
  ComponentSelection sel;
  sel.indices = {0, 1};
  sel.p_values.assign(5, 0.0);
  const LoadingMatrix loadings = component_loadings(model, fm, sel);

  const auto top13 = reduce_wavelengths(loadings, std::nullopt, 13);
  CHECK(top13.size() == 13);
  CHECK(std::is_sorted(top13.begin(), top13.end()));
  CHECK(std::set<WavelengthPair>(top13.begin(), top13.end()).size() == 13);

  const auto all = reduce_wavelengths(loadings, 0.0, std::nullopt);
  CHECK(all.size() == 20);

  CHECK_THROWS_AS(reduce_wavelengths(loadings, 1.0 + 1e-9, std::nullopt),
                  ValidationError);
  CHECK_THROWS_AS(reduce_wavelengths(loadings, -0.1, std::nullopt),
                  ValidationError);
  CHECK_THROWS_AS(reduce_wavelengths(loadings, std::nullopt, 0),
                  ValidationError);
  CHECK_THROWS_AS(reduce_wavelengths(loadings, std::nullopt, 21),
                  ValidationError);
  CHECK_THROWS_AS(reduce_wavelengths(loadings, 0.5, 13), ValidationError);
  CHECK_THROWS_AS(reduce_wavelengths(loadings, std::nullopt, std::nullopt),
                  ValidationError);
}

TEST_CASE("published reduced sets differ exactly in the starred pairs") {
  const auto algo1 = algo1_reduced_pairs();
  const auto algo2 = algo2_reduced_pairs();
  REQUIRE(algo1.size() == 13);
  REQUIRE(algo2.size() == 13);

  const std::set<WavelengthPair> set1(algo1.begin(), algo1.end());
  const std::set<WavelengthPair> set2(algo2.begin(), algo2.end());
  std::set<WavelengthPair> only1, only2, shared;
  std::set_difference(set1.begin(), set1.end(), set2.begin(), set2.end(),
                      std::inserter(only1, only1.begin()));
  std::set_difference(set2.begin(), set2.end(), set1.begin(), set1.end(),
                      std::inserter(only2, only2.begin()));
  std::set_intersection(set1.begin(), set1.end(), set2.begin(), set2.end(),
                        std::inserter(shared, shared.begin()));

  CHECK(shared.size() == 11);
  CHECK(only1 == std::set<WavelengthPair>{{380, 640}, {460, 640}});
  CHECK(only2 == std::set<WavelengthPair>{{380, 600}, {460, 660}});
}
