#ifndef FLUOROSIL_PREPROCESS_HPP
#define FLUOROSIL_PREPROCESS_HPP

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fluorosil/matrix.hpp"
#include "fluorosil/spectra.hpp"

namespace fluorosil {

enum class PreprocessingTag {
  raw,
  normalized,
  normalized_mean_scaled,
  // Column-wise concatenation of differently pre-processed matrices; each
  // column's own provenance is kept on its label.
  concatenated,
};

const std::string& to_string(PreprocessingTag tag);
PreprocessingTag preprocessing_tag_from_string(const std::string& token);

// How spectra are rescaled: per excitation block or over the whole vector,
// by peak or by integrated area.
enum class NormalizeGranularity { per_excitation, whole_spectrum };
enum class NormalizeStatistic { peak, area };

// Reference spectrum subtracted by mean-scaling.
enum class MeanScaleReference { per_patient, global_mean };

// A feature column is either an excitation-emission pair or a principal
// component score. `provenance` records the preprocessing that produced the
// column; it only differs from the matrix tag inside concatenated matrices.
struct ColumnLabel {
  enum class Kind { wavelength_pair, principal_component };

  Kind kind = Kind::wavelength_pair;
  WavelengthPair pair{};
  std::size_t pc_index = 0;  // 1-based
  PreprocessingTag provenance = PreprocessingTag::raw;

  static ColumnLabel for_pair(WavelengthPair p,
                              PreprocessingTag prov = PreprocessingTag::raw);
  static ColumnLabel for_component(std::size_t index_1based);

  // "I_337_410", "PC3"; pair labels gain a "norm:"/"meanscaled:" prefix when
  // their provenance is normalized / normalized_mean_scaled inside a
  // concatenated matrix.
  std::string name(PreprocessingTag matrix_tag) const;
  static ColumnLabel parse(const std::string& name, PreprocessingTag matrix_tag);

  friend bool operator==(const ColumnLabel&, const ColumnLabel&) = default;
};

struct RowKey {
  std::string patient_id;
  std::string site_id;
  Histology histology = Histology::NormalSquamous;

  friend bool operator==(const RowKey&, const RowKey&) = default;
};

// Row-per-sample feature table with column provenance.
struct FeatureMatrix {
  Matrix values;
  std::vector<ColumnLabel> column_labels;
  std::vector<RowKey> row_keys;
  PreprocessingTag tag = PreprocessingTag::raw;

  std::size_t rows() const { return values.rows(); }
  std::size_t cols() const { return values.cols(); }
  double at(std::size_t r, std::size_t c) const { return values(r, c); }
  double& at(std::size_t r, std::size_t c) { return values(r, c); }
  std::span<const double> row(std::size_t r) const { return values.row(r); }

  // Label/row-key bookkeeping consistency. Throws ValidationError.
  void validate() const;

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

// 0/1 SIL targets derived from the row keys.
std::vector<int> sil_targets(const FeatureMatrix& fm);

// Intensity matrix straight from the dataset, tag = raw.
FeatureMatrix raw_features(const Dataset& ds);

// Rescales each sample so the chosen statistic is 1 within each block (or
// the whole vector). Errors on an all-zero block, naming sample and
// excitation.
FeatureMatrix normalize(
    const Dataset& ds,
    NormalizeGranularity granularity = NormalizeGranularity::per_excitation,
    NormalizeStatistic statistic = NormalizeStatistic::peak);

// Same, applied to an already-built matrix whose columns are wavelength
// pairs. normalize is idempotent.
FeatureMatrix normalize(
    const FeatureMatrix& fm,
    NormalizeGranularity granularity = NormalizeGranularity::per_excitation,
    NormalizeStatistic statistic = NormalizeStatistic::peak);

// Subtracts the reference mean spectrum from every row of a normalized
// matrix. per_patient uses the columnwise mean over that patient's own rows
// (a single-site patient therefore maps to the zero vector).
FeatureMatrix mean_scale(
    const FeatureMatrix& fm,
    MeanScaleReference reference = MeanScaleReference::per_patient);

// Column subset in the order given; row order and keys preserved.
FeatureMatrix select_columns(const FeatureMatrix& fm,
                             std::span<const WavelengthPair> pairs);

// CSV with a provenance header line recording the preprocessing tag.
void save_feature_matrix(const FeatureMatrix& fm,
                         const std::filesystem::path& path);
FeatureMatrix load_feature_matrix(const std::filesystem::path& path);

}  // namespace fluorosil

#endif
