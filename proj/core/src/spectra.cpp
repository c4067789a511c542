#include "fluorosil/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "detail/text_util.hpp"
#include "fluorosil/errors.hpp"
#include "fluorosil/rng.hpp"

namespace fluorosil {

bool is_sil(Histology h) {
  return h == Histology::LowGradeSil || h == Histology::HighGradeSil;
}

const std::string& to_string(Histology h) {
  static const std::array<std::string, kHistologyCount> names = {
      "NS", "NC", "INFL", "LG_SIL", "HG_SIL"};
  return names[static_cast<std::size_t>(h)];
}

Histology histology_from_string(const std::string& token) {
  for (Histology h : kAllHistologies) {
    if (token == to_string(h)) return h;
  }
  throw ValidationError("unknown histology label '" + token +
                        "' (expected NS, NC, INFL, LG_SIL or HG_SIL)");
}

std::string WavelengthPair::column_name() const {
  return "I_" + std::to_string(excitation_nm) + "_" +
         std::to_string(emission_nm);
}

std::optional<WavelengthPair> WavelengthPair::parse_column_name(
    const std::string& name) {
  if (name.rfind("I_", 0) != 0) return std::nullopt;
  const auto rest = name.substr(2);
  const auto sep = rest.find('_');
  if (sep == std::string::npos) return std::nullopt;
  try {
    WavelengthPair p;
    p.excitation_nm = static_cast<int>(
        detail::parse_long(rest.substr(0, sep), "column name '" + name + "'"));
    p.emission_nm = static_cast<int>(
        detail::parse_long(rest.substr(sep + 1), "column name '" + name + "'"));
    return p;
  } catch (const ValidationError&) {
    return std::nullopt;
  }
}

WavelengthGrid::WavelengthGrid(std::vector<int> excitations,
                               std::vector<std::vector<int>> emissions)
    : excitations_(std::move(excitations)), emissions_(std::move(emissions)) {
  if (excitations_.empty() || excitations_.size() != emissions_.size()) {
    throw ValidationError("grid needs one emission list per excitation");
  }
  offsets_.resize(excitations_.size());
  pair_count_ = 0;
  for (std::size_t b = 0; b < emissions_.size(); ++b) {
    const auto& em = emissions_[b];
    if (em.empty()) {
      throw ValidationError("empty emission list for excitation " +
                            std::to_string(excitations_[b]));
    }
    if (std::adjacent_find(em.begin(), em.end(), std::greater_equal<int>()) !=
        em.end()) {
      throw ValidationError("emission list not strictly increasing at " +
                            std::to_string(excitations_[b]) + " nm");
    }
    offsets_[b] = pair_count_;
    pair_count_ += em.size();
  }
}

namespace {

std::vector<int> emission_range(int first, int count, int step = 5) {
  std::vector<int> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = first + i * step;
  return out;
}

}  // namespace

const WavelengthGrid& WavelengthGrid::standard() {
  static const WavelengthGrid grid({337, 380, 460},
                                   {emission_range(350, 59),
                                    emission_range(400, 56),
                                    emission_range(470, 45)});
  return grid;
}

std::vector<WavelengthPair> WavelengthGrid::pairs() const {
  std::vector<WavelengthPair> out;
  out.reserve(pair_count_);
  for (std::size_t b = 0; b < excitations_.size(); ++b) {
    for (int em : emissions_[b]) out.push_back({excitations_[b], em});
  }
  return out;
}

std::optional<std::size_t> WavelengthGrid::index_of(
    const WavelengthPair& p) const {
  for (std::size_t b = 0; b < excitations_.size(); ++b) {
    if (excitations_[b] != p.excitation_nm) continue;
    const auto& em = emissions_[b];
    const auto it = std::lower_bound(em.begin(), em.end(), p.emission_nm);
    if (it != em.end() && *it == p.emission_nm) {
      return offsets_[b] + static_cast<std::size_t>(it - em.begin());
    }
  }
  return std::nullopt;
}

void Dataset::validate() const {
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const std::string where = "sample " + std::to_string(i);
    if (s.patient_id.empty()) {
      throw ValidationError(where + ": empty patient_id");
    }
    if (s.intensities.size() != grid.pair_count()) {
      throw ValidationError(
          where + ": intensity length " + std::to_string(s.intensities.size()) +
          " does not match grid pair count " + std::to_string(grid.pair_count()));
    }
    for (std::size_t j = 0; j < s.intensities.size(); ++j) {
      const double v = s.intensities[j];
      if (!std::isfinite(v) || v < 0.0) {
        throw ValidationError(where + ", column " + std::to_string(j) +
                              ": intensity must be finite and >= 0");
      }
    }
    if (!seen.insert({s.patient_id, s.site_id}).second) {
      throw ValidationError(where + ": duplicate (patient_id, site_id) = (" +
                            s.patient_id + ", " + s.site_id + ")");
    }
  }
}

std::array<std::size_t, kHistologyCount> class_counts(const Dataset& ds) {
  std::array<std::size_t, kHistologyCount> counts{};
  for (const auto& s : ds.samples) {
    ++counts[static_cast<std::size_t>(s.histology)];
  }
  return counts;
}

Dataset load_dataset(const std::filesystem::path& path,
                     const WavelengthGrid& grid) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open dataset file " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw ValidationError("empty dataset file " + path.string());
  }
  const auto header = detail::split(detail::trim(line), ',');
  const std::size_t meta_cols = 3;
  if (header.size() < meta_cols || header[0] != "patient_id" ||
      header[1] != "site_id" || header[2] != "histology") {
    throw ValidationError(path.string() +
                          ": header must start with patient_id,site_id,histology");
  }
  const auto pairs = grid.pairs();
  if (header.size() - meta_cols != pairs.size()) {
    throw ValidationError(
        path.string() + ": expected " + std::to_string(pairs.size()) +
        " intensity columns, found " + std::to_string(header.size() - meta_cols));
  }
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    const std::string expected = pairs[j].column_name();
    if (header[meta_cols + j] != expected) {
      throw ValidationError(path.string() + ": header column " +
                            std::to_string(meta_cols + j + 1) + " is '" +
                            header[meta_cols + j] + "', expected '" + expected +
                            "'");
    }
  }

  Dataset ds;
  ds.grid = grid;
  std::size_t row = 1;
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
    SpectralSample s;
    s.patient_id = detail::trim(fields[0]);
    s.site_id = detail::trim(fields[1]);
    try {
      s.histology = histology_from_string(detail::trim(fields[2]));
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
    s.intensities.resize(pairs.size());
    for (std::size_t j = 0; j < pairs.size(); ++j) {
      s.intensities[j] = detail::parse_double(
          fields[meta_cols + j], where + ", column " + header[meta_cols + j]);
    }
    ds.samples.push_back(std::move(s));
  }
  ds.validate();
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) {
    throw ValidationError("cannot write dataset file " + path.string());
  }
  out << "patient_id,site_id,histology";
  for (const auto& p : ds.grid.pairs()) out << ',' << p.column_name();
  out << '\n';
  for (const auto& s : ds.samples) {
    out << s.patient_id << ',' << s.site_id << ',' << to_string(s.histology);
    for (double v : s.intensities) out << ',' << detail::format_double(v);
    out << '\n';
  }
  if (!out) {
    throw ValidationError("failed while writing " + path.string());
  }
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& ds, double fraction,
                                             bool by_patient,
                                             std::uint64_t seed) {
  if (ds.split_tag != SplitTag::unsplit) {
    throw ValidationError("dataset is already split");
  }
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ValidationError("split fraction must lie in (0, 1)");
  }

  Rng rng(seed);
  std::vector<bool> in_train(ds.samples.size(), false);

  if (by_patient) {
    std::vector<std::string> patients;
    std::map<std::string, std::vector<std::size_t>> by_id;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
      auto& rows = by_id[ds.samples[i].patient_id];
      if (rows.empty()) patients.push_back(ds.samples[i].patient_id);
      rows.push_back(i);
    }
    if (patients.size() < 2) {
      throw ValidationError("patient-disjoint split needs at least 2 patients");
    }
    rng.shuffle(patients);
    auto n_train = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(patients.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, patients.size() - 1);
    for (std::size_t i = 0; i < n_train; ++i) {
      for (std::size_t row : by_id[patients[i]]) in_train[row] = true;
    }
  } else {
    if (ds.samples.size() < 2) {
      throw ValidationError("split needs at least 2 samples");
    }
    std::vector<std::size_t> order(ds.samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    auto n_train = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(order.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, order.size() - 1);
    for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = true;
  }

  Dataset train, test;
  train.grid = ds.grid;
  test.grid = ds.grid;
  train.split_tag = SplitTag::train;
  test.split_tag = SplitTag::test;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    (in_train[i] ? train : test).samples.push_back(ds.samples[i]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace fluorosil
