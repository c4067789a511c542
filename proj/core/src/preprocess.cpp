#include "fluorosil/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "detail/text_util.hpp"
#include "fluorosil/errors.hpp"

namespace fluorosil {

const std::string& to_string(PreprocessingTag tag) {
  static const std::array<std::string, 4> names = {
      "raw", "normalized", "normalized_mean_scaled", "concatenated"};
  return names[static_cast<std::size_t>(tag)];
}

PreprocessingTag preprocessing_tag_from_string(const std::string& token) {
  for (auto tag : {PreprocessingTag::raw, PreprocessingTag::normalized,
                   PreprocessingTag::normalized_mean_scaled,
                   PreprocessingTag::concatenated}) {
    if (token == to_string(tag)) return tag;
  }
  throw ValidationError("unknown preprocessing tag '" + token + "'");
}

ColumnLabel ColumnLabel::for_pair(WavelengthPair p, PreprocessingTag prov) {
  ColumnLabel label;
  label.kind = Kind::wavelength_pair;
  label.pair = p;
  label.provenance = prov;
  return label;
}

ColumnLabel ColumnLabel::for_component(std::size_t index_1based) {
  ColumnLabel label;
  label.kind = Kind::principal_component;
  label.pc_index = index_1based;
  return label;
}

std::string ColumnLabel::name(PreprocessingTag matrix_tag) const {
  if (kind == Kind::principal_component) {
    return "PC" + std::to_string(pc_index);
  }
  std::string base = pair.column_name();
  if (matrix_tag != PreprocessingTag::concatenated) return base;
  switch (provenance) {
    case PreprocessingTag::normalized:
      return "norm:" + base;
    case PreprocessingTag::normalized_mean_scaled:
      return "meanscaled:" + base;
    default:
      return base;
  }
}

ColumnLabel ColumnLabel::parse(const std::string& name,
                               PreprocessingTag matrix_tag) {
  if (name.rfind("PC", 0) == 0) {
    const long idx = detail::parse_long(name.substr(2), "column '" + name + "'");
    if (idx < 1) throw ValidationError("bad component column '" + name + "'");
    return for_component(static_cast<std::size_t>(idx));
  }
  std::string base = name;
  PreprocessingTag prov = matrix_tag;
  if (name.rfind("norm:", 0) == 0) {
    base = name.substr(5);
    prov = PreprocessingTag::normalized;
  } else if (name.rfind("meanscaled:", 0) == 0) {
    base = name.substr(11);
    prov = PreprocessingTag::normalized_mean_scaled;
  }
  const auto pair = WavelengthPair::parse_column_name(base);
  if (!pair) {
    throw ValidationError("cannot parse feature column name '" + name + "'");
  }
  return for_pair(*pair, prov);
}

void FeatureMatrix::validate() const {
  if (column_labels.size() != cols()) {
    throw ValidationError("feature matrix has " +
                          std::to_string(column_labels.size()) +
                          " column labels for " + std::to_string(cols()) +
                          " columns");
  }
  if (row_keys.size() != rows()) {
    throw ValidationError("feature matrix has " +
                          std::to_string(row_keys.size()) + " row keys for " +
                          std::to_string(rows()) + " rows");
  }
}

std::vector<int> sil_targets(const FeatureMatrix& fm) {
  std::vector<int> t(fm.rows());
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    t[r] = is_sil(fm.row_keys[r].histology) ? 1 : 0;
  }
  return t;
}

FeatureMatrix raw_features(const Dataset& ds) {
  ds.validate();
  FeatureMatrix fm;
  fm.tag = PreprocessingTag::raw;
  fm.values = Matrix(ds.samples.size(), ds.grid.pair_count());
  for (const auto& p : ds.grid.pairs()) {
    fm.column_labels.push_back(ColumnLabel::for_pair(p, PreprocessingTag::raw));
  }
  fm.row_keys.reserve(ds.samples.size());
  for (std::size_t r = 0; r < ds.samples.size(); ++r) {
    const auto& s = ds.samples[r];
    fm.row_keys.push_back({s.patient_id, s.site_id, s.histology});
    std::copy(s.intensities.begin(), s.intensities.end(),
              fm.values.row(r).begin());
  }
  return fm;
}

namespace {

// Column ranges sharing one normalization scale. Per-excitation blocks are
// recovered from the column labels (columns of one excitation must be
// contiguous, as produced by raw_features / select_columns).
std::vector<std::pair<std::size_t, std::size_t>> normalization_blocks(
    const FeatureMatrix& fm, NormalizeGranularity granularity) {
  if (granularity == NormalizeGranularity::whole_spectrum) {
    return {{0, fm.cols()}};
  }
  std::vector<std::pair<std::size_t, std::size_t>> blocks;
  std::size_t start = 0;
  for (std::size_t c = 0; c < fm.cols(); ++c) {
    if (fm.column_labels[c].kind != ColumnLabel::Kind::wavelength_pair) {
      throw ValidationError("normalize requires wavelength-pair columns");
    }
    if (c > 0 && fm.column_labels[c].pair.excitation_nm !=
                     fm.column_labels[c - 1].pair.excitation_nm) {
      blocks.emplace_back(start, c);
      start = c;
    }
  }
  blocks.emplace_back(start, fm.cols());
  return blocks;
}

FeatureMatrix normalize_matrix(const FeatureMatrix& fm,
                               NormalizeGranularity granularity,
                               NormalizeStatistic statistic) {
  fm.validate();
  FeatureMatrix out = fm;
  out.tag = PreprocessingTag::normalized;
  for (auto& label : out.column_labels) {
    label.provenance = PreprocessingTag::normalized;
  }
  const auto blocks = normalization_blocks(fm, granularity);
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    for (const auto& [lo, hi] : blocks) {
      double scale = 0.0;
      if (statistic == NormalizeStatistic::peak) {
        for (std::size_t c = lo; c < hi; ++c) {
          scale = std::max(scale, fm.at(r, c));
        }
      } else {
        for (std::size_t c = lo; c < hi; ++c) scale += fm.at(r, c);
      }
      if (!(scale > 0.0)) {
        const auto& key = fm.row_keys[r];
        const int ex = fm.column_labels[lo].pair.excitation_nm;
        throw ValidationError(
            "cannot normalize all-zero excitation block at " +
            std::to_string(ex) + " nm for sample (" + key.patient_id + ", " +
            key.site_id + ")");
      }
      for (std::size_t c = lo; c < hi; ++c) {
        out.at(r, c) = fm.at(r, c) / scale;
      }
    }
  }
  return out;
}

}  // namespace

FeatureMatrix normalize(const Dataset& ds, NormalizeGranularity granularity,
                        NormalizeStatistic statistic) {
  return normalize_matrix(raw_features(ds), granularity, statistic);
}

FeatureMatrix normalize(const FeatureMatrix& fm,
                        NormalizeGranularity granularity,
                        NormalizeStatistic statistic) {
  return normalize_matrix(fm, granularity, statistic);
}

FeatureMatrix mean_scale(const FeatureMatrix& fm, MeanScaleReference reference) {
  fm.validate();
  if (fm.tag != PreprocessingTag::normalized) {
    throw ValidationError("mean_scale expects a normalized matrix, got tag '" +
                          to_string(fm.tag) + "'");
  }
  FeatureMatrix out = fm;
  out.tag = PreprocessingTag::normalized_mean_scaled;
  for (auto& label : out.column_labels) {
    label.provenance = PreprocessingTag::normalized_mean_scaled;
  }

  if (reference == MeanScaleReference::global_mean) {
    std::vector<double> mean(fm.cols(), 0.0);
    for (std::size_t r = 0; r < fm.rows(); ++r) {
      for (std::size_t c = 0; c < fm.cols(); ++c) mean[c] += fm.at(r, c);
    }
    for (auto& m : mean) m /= static_cast<double>(fm.rows());
    for (std::size_t r = 0; r < fm.rows(); ++r) {
      for (std::size_t c = 0; c < fm.cols(); ++c) out.at(r, c) -= mean[c];
    }
    return out;
  }

  std::map<std::string, std::vector<std::size_t>> by_patient;
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    by_patient[fm.row_keys[r].patient_id].push_back(r);
  }
  for (const auto& [patient, rows] : by_patient) {
    std::vector<double> mean(fm.cols(), 0.0);
    for (std::size_t r : rows) {
      for (std::size_t c = 0; c < fm.cols(); ++c) mean[c] += fm.at(r, c);
    }
    for (auto& m : mean) m /= static_cast<double>(rows.size());
    for (std::size_t r : rows) {
      for (std::size_t c = 0; c < fm.cols(); ++c) out.at(r, c) -= mean[c];
    }
  }
  return out;
}

FeatureMatrix select_columns(const FeatureMatrix& fm,
                             std::span<const WavelengthPair> pairs) {
  fm.validate();
  std::vector<std::size_t> indices;
  indices.reserve(pairs.size());
  for (const auto& p : pairs) {
    bool found = false;
    for (std::size_t c = 0; c < fm.cols(); ++c) {
      if (fm.column_labels[c].kind == ColumnLabel::Kind::wavelength_pair &&
          fm.column_labels[c].pair == p) {
        indices.push_back(c);
        found = true;
        break;
      }
    }
    if (!found) {
      throw ValidationError("requested pair " + p.column_name() +
                            " is not a column of the matrix");
    }
  }
  FeatureMatrix out;
  out.tag = fm.tag;
  out.row_keys = fm.row_keys;
  out.values = Matrix(fm.rows(), indices.size());
  for (std::size_t c = 0; c < indices.size(); ++c) {
    out.column_labels.push_back(fm.column_labels[indices[c]]);
    for (std::size_t r = 0; r < fm.rows(); ++r) {
      out.at(r, c) = fm.at(r, indices[c]);
    }
  }
  return out;
}

void save_feature_matrix(const FeatureMatrix& fm,
                         const std::filesystem::path& path) {
  fm.validate();
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) {
    throw ValidationError("cannot write feature matrix file " + path.string());
  }
  out << "# fluorosil-features v1 preprocessing=" << to_string(fm.tag) << '\n';
  out << "patient_id,site_id,histology";
  for (const auto& label : fm.column_labels) out << ',' << label.name(fm.tag);
  out << '\n';
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    const auto& key = fm.row_keys[r];
    out << key.patient_id << ',' << key.site_id << ','
        << to_string(key.histology);
    for (std::size_t c = 0; c < fm.cols(); ++c) {
      out << ',' << detail::format_double(fm.at(r, c));
    }
    out << '\n';
  }
  if (!out) {
    throw ValidationError("failed while writing " + path.string());
  }
}

FeatureMatrix load_feature_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open feature matrix file " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw ValidationError("empty feature matrix file " + path.string());
  }

  const std::string prefix = "# fluorosil-features v1 preprocessing=";
  const std::string header_line = detail::trim(line);
  if (header_line.rfind(prefix, 0) != 0) {
    throw ValidationError(path.string() + ": missing provenance header line");
  }
  FeatureMatrix fm;
  fm.tag = preprocessing_tag_from_string(header_line.substr(prefix.size()));

  if (!std::getline(in, line)) {
    throw ValidationError(path.string() + ": missing column header");
  }
  const auto header = detail::split(detail::trim(line), ',');
  if (header.size() < 3 || header[0] != "patient_id" || header[1] != "site_id" ||
      header[2] != "histology") {
    throw ValidationError(path.string() +
                          ": header must start with patient_id,site_id,histology");
  }
  for (std::size_t c = 3; c < header.size(); ++c) {
    fm.column_labels.push_back(ColumnLabel::parse(header[c], fm.tag));
  }

  std::vector<double> values;
  std::size_t row = 2;
  while (std::getline(in, line)) {
    ++row;
    const std::string trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    const auto fields = detail::split(trimmed, ',');
    const std::string where = path.string() + ", row " + std::to_string(row);
    if (fields.size() != header.size()) {
      throw ValidationError(where + ": expected " +
                            std::to_string(header.size()) + " fields, found " +
                            std::to_string(fields.size()));
    }
    RowKey key;
    key.patient_id = detail::trim(fields[0]);
    key.site_id = detail::trim(fields[1]);
    key.histology = histology_from_string(detail::trim(fields[2]));
    fm.row_keys.push_back(std::move(key));
    for (std::size_t c = 3; c < fields.size(); ++c) {
      values.push_back(detail::parse_double(fields[c], where));
    }
  }
  const std::size_t n_cols = fm.column_labels.size();
  const std::size_t n_rows = fm.row_keys.size();
  fm.values = Matrix(n_rows, n_cols);
  std::copy(values.begin(), values.end(), fm.values.data().begin());
  fm.validate();
  return fm;
}

}  // namespace fluorosil
