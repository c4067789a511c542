#include "fluorosil/dimred.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>

#include "detail/text_util.hpp"
#include "fluorosil/errors.hpp"

namespace fluorosil {

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
// eigenvalues in `values` and eigenvectors as columns of `vectors`.
void jacobi_eigen(Matrix a, std::vector<double>& values, Matrix& vectors) {
  const std::size_t n = a.rows();
  vectors = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) vectors(i, i) = 1.0;

  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    double diag = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      diag += a(p, p) * a(p, p);
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    }
    if (off <= 1e-30 * (diag + off) || off == 0.0) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        // Skip rotations that no longer change anything at double precision.
        if (std::fabs(apq) <= 1e-18 * (std::fabs(app) + std::fabs(aqq))) {
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          continue;
        }
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;

        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = vectors(k, p);
          const double vkq = vectors(k, q);
          vectors(k, p) = c * vkp - s * vkq;
          vectors(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  values.resize(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = a(i, i);
}

// Largest-magnitude entry positive; first such index wins ties.
void fix_component_sign(Matrix& components, std::size_t col) {
  std::size_t best = 0;
  double best_abs = -1.0;
  for (std::size_t i = 0; i < components.rows(); ++i) {
    const double v = std::fabs(components(i, col));
    if (v > best_abs) {
      best_abs = v;
      best = i;
    }
  }
  if (components(best, col) < 0.0) {
    for (std::size_t i = 0; i < components.rows(); ++i) {
      components(i, col) = -components(i, col);
    }
  }
}

std::vector<double> column_means(const FeatureMatrix& fm) {
  std::vector<double> mean(fm.cols(), 0.0);
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    for (std::size_t c = 0; c < fm.cols(); ++c) mean[c] += fm.at(r, c);
  }
  for (auto& m : mean) m /= static_cast<double>(fm.rows());
  return mean;
}

}  // namespace

PcaModel fit_pca(const FeatureMatrix& fm, std::size_t n_components) {
  fm.validate();
  const std::size_t n = fm.rows();
  const std::size_t d = fm.cols();
  if (n < 2) {
    throw ValidationError("fit_pca needs at least 2 rows");
  }
  if (n_components == 0 || n_components > std::min(n - 1, d)) {
    throw ValidationError("n_components must lie in [1, min(rows-1, cols)]");
  }

  PcaModel model;
  model.mean = column_means(fm);
  model.feature_labels = fm.column_labels;

  // Sample covariance of the centered columns.
  Matrix cov(d, d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < d; ++i) {
      const double xi = fm.at(r, i) - model.mean[i];
      for (std::size_t j = i; j < d; ++j) {
        cov(i, j) += xi * (fm.at(r, j) - model.mean[j]);
      }
    }
  }
  const double denom = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      cov(i, j) /= denom;
      cov(j, i) = cov(i, j);
    }
  }
  double total_variance = 0.0;
  for (std::size_t i = 0; i < d; ++i) total_variance += cov(i, i);

  std::vector<double> values;
  Matrix vectors;
  jacobi_eigen(cov, values, vectors);

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] > values[b];
  });

  const double lead = std::max(values[order[0]], 0.0);
  std::size_t available = n_components;
  for (std::size_t k = 0; k < n_components; ++k) {
    const double ev = values[order[k]];
    if (ev <= lead * 1e-12 || ev <= 0.0) {
      available = k;
      break;
    }
  }
  if (available < n_components) {
    std::cerr << "fit_pca: rank " << available << " below requested "
              << n_components << " components; returning available ones\n";
  }
  if (available == 0) {
    throw NumericalError("fit_pca: data has no variance");
  }

  model.components = Matrix(d, available);
  model.eigenvalues.resize(available);
  model.explained_variance_ratio.resize(available);
  for (std::size_t k = 0; k < available; ++k) {
    model.eigenvalues[k] = std::max(values[order[k]], 0.0);
    model.explained_variance_ratio[k] =
        total_variance > 0.0 ? model.eigenvalues[k] / total_variance : 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      model.components(i, k) = vectors(i, order[k]);
    }
    fix_component_sign(model.components, k);
  }
  return model;
}

FeatureMatrix project(const PcaModel& model, const FeatureMatrix& fm,
                      std::size_t k) {
  fm.validate();
  if (fm.cols() != model.feature_count()) {
    throw ValidationError("project: matrix has " + std::to_string(fm.cols()) +
                          " columns, model expects " +
                          std::to_string(model.feature_count()));
  }
  if (k > model.component_count()) {
    throw ValidationError("project: requested " + std::to_string(k) +
                          " components, model stores " +
                          std::to_string(model.component_count()));
  }
  FeatureMatrix scores;
  scores.tag = fm.tag;
  scores.row_keys = fm.row_keys;
  scores.values = Matrix(fm.rows(), k);
  for (std::size_t c = 0; c < k; ++c) {
    scores.column_labels.push_back(ColumnLabel::for_component(c + 1));
  }
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      double dot = 0.0;
      for (std::size_t i = 0; i < fm.cols(); ++i) {
        dot += (fm.at(r, i) - model.mean[i]) * model.components(i, c);
      }
      scores.at(r, c) = dot;
    }
  }
  return scores;
}

namespace {

// Regularized incomplete beta function I_x(a, b) via the continued fraction
// (modified Lentz), standard numerics.
double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;

  const double ln_front = a * std::log(x) + b * std::log1p(-x) -
                          std::log(a) -
                          (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));

  // Use the symmetry relation for faster convergence.
  if (x > (a + 1.0) / (a + b + 2.0)) {
    return 1.0 - incomplete_beta(b, a, 1.0 - x);
  }

  const double tiny = 1e-300;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double f = d;
  for (int m = 1; m <= 300; ++m) {
    const double dm = static_cast<double>(m);
    // Even step.
    double numerator = dm * (b - dm) * x / ((a + 2.0 * dm - 1.0) * (a + 2.0 * dm));
    d = 1.0 + numerator * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + numerator / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    f *= d * c;
    // Odd step.
    numerator = -(a + dm) * (a + b + dm) * x / ((a + 2.0 * dm) * (a + 2.0 * dm + 1.0));
    d = 1.0 + numerator * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + numerator / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    f *= delta;
    if (std::fabs(delta - 1.0) < 1e-15) break;
  }
  return std::exp(ln_front) * f;
}

}  // namespace

double student_t_cdf(double t, double dof) {
  if (dof <= 0.0) {
    throw ValidationError("student_t_cdf: degrees of freedom must be > 0");
  }
  if (!std::isfinite(t)) return t > 0.0 ? 1.0 : 0.0;
  const double x = dof / (dof + t * t);
  const double tail = 0.5 * incomplete_beta(0.5 * dof, 0.5, x);
  return t >= 0.0 ? 1.0 - tail : tail;
}

ComponentSelection select_components(const FeatureMatrix& scores,
                                     const std::vector<int>& sil_labels,
                                     double alpha) {
  scores.validate();
  if (sil_labels.size() != scores.rows()) {
    throw ValidationError("select_components: label count mismatch");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("select_components: alpha must lie in (0, 1)");
  }
  std::size_t n1 = 0, n0 = 0;
  for (int lab : sil_labels) (lab != 0 ? n1 : n0) += 1;
  if (n1 < 2 || n0 < 2) {
    throw ValidationError(
        "select_components: each class needs at least 2 samples");
  }

  ComponentSelection sel;
  sel.alpha = alpha;
  sel.p_values.resize(scores.cols());
  for (std::size_t c = 0; c < scores.cols(); ++c) {
    double m1 = 0.0, m0 = 0.0;
    for (std::size_t r = 0; r < scores.rows(); ++r) {
      (sil_labels[r] != 0 ? m1 : m0) += scores.at(r, c);
    }
    m1 /= static_cast<double>(n1);
    m0 /= static_cast<double>(n0);
    double ss1 = 0.0, ss0 = 0.0;
    for (std::size_t r = 0; r < scores.rows(); ++r) {
      const double v = scores.at(r, c);
      if (sil_labels[r] != 0) {
        ss1 += (v - m1) * (v - m1);
      } else {
        ss0 += (v - m0) * (v - m0);
      }
    }
    const double dof = static_cast<double>(n1 + n0 - 2);
    const double pooled = (ss1 + ss0) / dof;
    const double se = std::sqrt(pooled * (1.0 / static_cast<double>(n1) +
                                          1.0 / static_cast<double>(n0)));
    double p;
    if (se == 0.0) {
      p = (m1 == m0) ? 0.5 : 0.0;
    } else {
      const double t = (m1 - m0) / se;
      // One-sided in the empirical direction.
      p = student_t_cdf(-std::fabs(t), dof);
    }
    sel.p_values[c] = p;
    if (p < alpha) sel.indices.push_back(c);
  }
  return sel;
}

LoadingMatrix component_loadings(const PcaModel& model, const FeatureMatrix& fm,
                                 const ComponentSelection& selection) {
  if (selection.indices.empty()) {
    throw ValidationError("component_loadings: empty component selection");
  }
  std::size_t max_index = 0;
  for (std::size_t idx : selection.indices) max_index = std::max(max_index, idx);
  const FeatureMatrix scores = project(model, fm, max_index + 1);

  const std::size_t n = fm.rows();
  const auto feat_mean = column_means(fm);
  const auto score_mean = column_means(scores);

  LoadingMatrix out;
  out.feature_labels = fm.column_labels;
  out.component_indices = selection.indices;
  out.values = Matrix(fm.cols(), selection.indices.size());

  for (std::size_t f = 0; f < fm.cols(); ++f) {
    double feat_ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double d = fm.at(r, f) - feat_mean[f];
      feat_ss += d * d;
    }
    if (feat_ss == 0.0) {
      std::cerr << "component_loadings: zero-variance feature column "
                << fm.column_labels[f].name(fm.tag) << "; loading set to 0\n";
      continue;  // row already zero
    }
    for (std::size_t k = 0; k < selection.indices.size(); ++k) {
      const std::size_t c = selection.indices[k];
      double cross = 0.0, score_ss = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const double df = fm.at(r, f) - feat_mean[f];
        const double ds = scores.at(r, c) - score_mean[c];
        cross += df * ds;
        score_ss += ds * ds;
      }
      out.values(f, k) =
          score_ss > 0.0 ? cross / std::sqrt(feat_ss * score_ss) : 0.0;
    }
  }
  return out;
}

std::vector<WavelengthPair> reduce_wavelengths(const LoadingMatrix& loadings,
                                               std::optional<double> threshold,
                                               std::optional<std::size_t> top_k) {
  if (threshold.has_value() == top_k.has_value()) {
    throw ValidationError(
        "reduce_wavelengths: exactly one of threshold / top_k must be given");
  }
  if (threshold && !(*threshold >= 0.0 && *threshold <= 1.0)) {
    throw ValidationError("reduce_wavelengths: threshold must lie in [0, 1]");
  }

  struct Scored {
    WavelengthPair pair;
    double score;
  };
  std::vector<Scored> scored;
  for (std::size_t f = 0; f < loadings.feature_labels.size(); ++f) {
    const auto& label = loadings.feature_labels[f];
    if (label.kind != ColumnLabel::Kind::wavelength_pair) {
      throw ValidationError(
          "reduce_wavelengths: loadings must be over wavelength-pair features");
    }
    double best = 0.0;
    for (std::size_t k = 0; k < loadings.values.cols(); ++k) {
      best = std::max(best, std::fabs(loadings.values(f, k)));
    }
    scored.push_back({label.pair, best});
  }

  std::vector<WavelengthPair> selected;
  if (threshold) {
    for (const auto& s : scored) {
      if (s.score >= *threshold) selected.push_back(s.pair);
    }
  } else {
    if (*top_k == 0 || *top_k > scored.size()) {
      throw ValidationError("reduce_wavelengths: top_k must lie in [1, " +
                            std::to_string(scored.size()) + "]");
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const Scored& a, const Scored& b) {
                       if (a.score != b.score) return a.score > b.score;
                       return a.pair < b.pair;
                     });
    for (std::size_t i = 0; i < *top_k; ++i) selected.push_back(scored[i].pair);
  }
  std::sort(selected.begin(), selected.end());
  return selected;
}

namespace {

const std::vector<WavelengthPair> kAlgo1Pairs = {
    {337, 410}, {337, 430}, {337, 510}, {337, 580}, {380, 410},
    {380, 430}, {380, 510}, {380, 580}, {380, 640}, {460, 580},
    {460, 600}, {460, 620}, {460, 640}};

const std::vector<WavelengthPair> kAlgo2Pairs = {
    {337, 410}, {337, 430}, {337, 510}, {337, 580}, {380, 410},
    {380, 430}, {380, 510}, {380, 580}, {380, 600}, {460, 580},
    {460, 600}, {460, 620}, {460, 660}};

}  // namespace

std::span<const WavelengthPair> algo1_reduced_pairs() { return kAlgo1Pairs; }
std::span<const WavelengthPair> algo2_reduced_pairs() { return kAlgo2Pairs; }

void save_pca_model(const PcaModel& model, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) {
    throw ValidationError("cannot write PCA model file " + path.string());
  }
  out << "# fluorosil-pca v1 features=" << model.feature_count()
      << " components=" << model.component_count() << '\n';
  out << "# eigenvalues";
  for (double v : model.eigenvalues) out << ',' << detail::format_double(v);
  out << '\n';
  out << "# explained_variance_ratio";
  for (double v : model.explained_variance_ratio) {
    out << ',' << detail::format_double(v);
  }
  out << '\n';
  out << "feature,mean";
  for (std::size_t k = 0; k < model.component_count(); ++k) {
    out << ",PC" << (k + 1);
  }
  out << '\n';
  for (std::size_t f = 0; f < model.feature_count(); ++f) {
    out << model.feature_labels[f].name(PreprocessingTag::raw) << ','
        << detail::format_double(model.mean[f]);
    for (std::size_t k = 0; k < model.component_count(); ++k) {
      out << ',' << detail::format_double(model.components(f, k));
    }
    out << '\n';
  }
  if (!out) {
    throw ValidationError("failed while writing " + path.string());
  }
}

PcaModel load_pca_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open PCA model file " + path.string());
  }
  std::string line;
  if (!std::getline(in, line) ||
      detail::trim(line).rfind("# fluorosil-pca v1", 0) != 0) {
    throw ValidationError(path.string() + ": missing PCA header");
  }
  PcaModel model;
  if (!std::getline(in, line)) {
    throw ValidationError(path.string() + ": missing eigenvalue line");
  }
  auto fields = detail::split(detail::trim(line), ',');
  for (std::size_t i = 1; i < fields.size(); ++i) {
    model.eigenvalues.push_back(
        detail::parse_double(fields[i], path.string() + " eigenvalues"));
  }
  if (!std::getline(in, line)) {
    throw ValidationError(path.string() + ": missing variance ratio line");
  }
  fields = detail::split(detail::trim(line), ',');
  for (std::size_t i = 1; i < fields.size(); ++i) {
    model.explained_variance_ratio.push_back(
        detail::parse_double(fields[i], path.string() + " variance ratios"));
  }
  if (!std::getline(in, line)) {
    throw ValidationError(path.string() + ": missing column header");
  }
  const auto header = detail::split(detail::trim(line), ',');
  const std::size_t k = header.size() - 2;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    const std::string trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    fields = detail::split(trimmed, ',');
    if (fields.size() != header.size()) {
      throw ValidationError(path.string() + ": ragged PCA row");
    }
    model.feature_labels.push_back(
        ColumnLabel::parse(fields[0], PreprocessingTag::raw));
    model.mean.push_back(detail::parse_double(fields[1], path.string()));
    std::vector<double> comps(k);
    for (std::size_t i = 0; i < k; ++i) {
      comps[i] = detail::parse_double(fields[2 + i], path.string());
    }
    rows.push_back(std::move(comps));
  }
  model.components = Matrix(rows.size(), k);
  for (std::size_t f = 0; f < rows.size(); ++f) {
    for (std::size_t c = 0; c < k; ++c) model.components(f, c) = rows[f][c];
  }
  if (model.eigenvalues.size() != k) {
    throw ValidationError(path.string() + ": eigenvalue count mismatch");
  }
  return model;
}

void save_loading_matrix(const LoadingMatrix& loadings,
                         const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) {
    throw ValidationError("cannot write loading matrix file " + path.string());
  }
  out << "# fluorosil-loadings v1 components";
  for (std::size_t idx : loadings.component_indices) out << ",PC" << (idx + 1);
  out << '\n';
  out << "feature";
  for (std::size_t idx : loadings.component_indices) out << ",PC" << (idx + 1);
  out << '\n';
  for (std::size_t f = 0; f < loadings.feature_labels.size(); ++f) {
    out << loadings.feature_labels[f].name(PreprocessingTag::raw);
    for (std::size_t k = 0; k < loadings.values.cols(); ++k) {
      out << ',' << detail::format_double(loadings.values(f, k));
    }
    out << '\n';
  }
  if (!out) {
    throw ValidationError("failed while writing " + path.string());
  }
}

}  // namespace fluorosil
