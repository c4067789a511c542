#ifndef FLUOROSIL_DIMRED_HPP
#define FLUOROSIL_DIMRED_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "fluorosil/matrix.hpp"
#include "fluorosil/preprocess.hpp"

namespace fluorosil {

// Principal components of a training matrix. Components are the columns of
// `components` (feature dim x component count), orthonormal, ordered by
// descending eigenvalue, with a fixed sign convention: each component's
// largest-magnitude entry is positive.
struct PcaModel {
  std::vector<double> mean;  // training column means
  Matrix components;
  std::vector<double> eigenvalues;             // descending, clamped >= 0
  std::vector<double> explained_variance_ratio;
  std::vector<ColumnLabel> feature_labels;

  std::size_t feature_count() const { return mean.size(); }
  std::size_t component_count() const { return components.cols(); }
};

// Eigendecomposition of the sample covariance of the mean-centered columns.
// If the numerical rank is below n_components the available components are
// returned with a warning on stderr.
PcaModel fit_pca(const FeatureMatrix& fm, std::size_t n_components);

// Scores matrix (columns PC1..PCk), preserving row keys and tag.
FeatureMatrix project(const PcaModel& model, const FeatureMatrix& fm,
                      std::size_t k);

// PCs whose SIL / non-SIL score distributions differ significantly under an
// unpaired two-sample t-test (pooled variance, one-sided in the empirical
// direction).
struct ComponentSelection {
  std::vector<std::size_t> indices;  // 0-based, ascending
  std::vector<double> p_values;      // one per score column
  double alpha = 0.05;
};

ComponentSelection select_components(const FeatureMatrix& scores,
                                     const std::vector<int>& sil_labels,
                                     double alpha);

// Pearson correlation between each original feature column and each selected
// component's scores. Zero-variance feature columns get loading 0 with a
// warning.
struct LoadingMatrix {
  Matrix values;  // feature x selected component
  std::vector<ColumnLabel> feature_labels;
  std::vector<std::size_t> component_indices;  // 0-based
};

LoadingMatrix component_loadings(const PcaModel& model, const FeatureMatrix& fm,
                                 const ComponentSelection& selection);

// Wavelength pairs whose max |loading| across the selected components meets
// the threshold (inclusive), or the top_k such pairs. Exactly one of
// threshold / top_k must be given. Result is sorted by (excitation,
// emission); ties in the top_k ranking break the same way.
std::vector<WavelengthPair> reduce_wavelengths(
    const LoadingMatrix& loadings, std::optional<double> threshold,
    std::optional<std::size_t> top_k);

// The two published 13-pair reduced sets. They share 11 pairs; algorithm (1)
// additionally has (380,640) and (460,640); algorithm (2) has (380,600) and
// (460,660).
std::span<const WavelengthPair> algo1_reduced_pairs();
std::span<const WavelengthPair> algo2_reduced_pairs();

// CDF of Student's t distribution with `dof` degrees of freedom.
double student_t_cdf(double t, double dof);

void save_pca_model(const PcaModel& model, const std::filesystem::path& path);
PcaModel load_pca_model(const std::filesystem::path& path);
void save_loading_matrix(const LoadingMatrix& loadings,
                         const std::filesystem::path& path);

}  // namespace fluorosil

#endif
