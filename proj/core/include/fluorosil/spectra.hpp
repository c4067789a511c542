#ifndef FLUOROSIL_SPECTRA_HPP
#define FLUOROSIL_SPECTRA_HPP

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fluorosil {

// Histo-pathology classes. LG/HG SIL form the positive (SIL) class for
// screening; the rest count as non-SIL.
enum class Histology {
  NormalSquamous,
  NormalColumnar,
  Inflammation,
  LowGradeSil,
  HighGradeSil,
};

inline constexpr std::size_t kHistologyCount = 5;
inline constexpr std::array<Histology, kHistologyCount> kAllHistologies = {
    Histology::NormalSquamous, Histology::NormalColumnar,
    Histology::Inflammation, Histology::LowGradeSil, Histology::HighGradeSil};

bool is_sil(Histology h);
const std::string& to_string(Histology h);
// Accepts the canonical tokens NS, NC, INFL, LG_SIL, HG_SIL.
Histology histology_from_string(const std::string& token);

// One (excitation, emission) coordinate, in nm.
struct WavelengthPair {
  int excitation_nm = 0;
  int emission_nm = 0;

  auto operator<=>(const WavelengthPair&) const = default;

  // CSV column name, e.g. "I_337_410".
  std::string column_name() const;
  static std::optional<WavelengthPair> parse_column_name(const std::string&);
};

// The measurement grid: a list of excitation wavelengths, each with its own
// strictly increasing emission wavelength list (5 nm spacing in the standard
// grid). Intensity vectors are laid out excitation-major in this order.
class WavelengthGrid {
 public:
  WavelengthGrid() = default;
  WavelengthGrid(std::vector<int> excitations,
                 std::vector<std::vector<int>> emissions);

  // 337/380/460 nm with 59/56/45 emission wavelengths (160 pairs total).
  // Emission ranges: 350-640, 400-675 and 470-690 nm at 5 nm spacing.
  static const WavelengthGrid& standard();

  const std::vector<int>& excitations() const { return excitations_; }
  const std::vector<int>& emissions(std::size_t block) const {
    return emissions_[block];
  }
  std::size_t block_count() const { return excitations_.size(); }
  std::size_t block_offset(std::size_t block) const { return offsets_[block]; }
  std::size_t block_size(std::size_t block) const {
    return emissions_[block].size();
  }
  std::size_t pair_count() const { return pair_count_; }

  std::vector<WavelengthPair> pairs() const;
  std::optional<std::size_t> index_of(const WavelengthPair& p) const;

  friend bool operator==(const WavelengthGrid&, const WavelengthGrid&) = default;

 private:
  std::vector<int> excitations_;
  std::vector<std::vector<int>> emissions_;
  std::vector<std::size_t> offsets_;
  std::size_t pair_count_ = 0;
};

// One measured site: calibrated fluorescence intensities over the grid plus
// identifying metadata.
struct SpectralSample {
  std::string patient_id;
  std::string site_id;
  Histology histology = Histology::NormalSquamous;
  std::vector<double> intensities;

  friend bool operator==(const SpectralSample&, const SpectralSample&) = default;
};

enum class SplitTag { unsplit, train, test };

struct Dataset {
  WavelengthGrid grid;
  std::vector<SpectralSample> samples;
  SplitTag split_tag = SplitTag::unsplit;

  // Checks sample/grid consistency, finite non-negative intensities,
  // non-empty ids and (patient, site) uniqueness. Throws ValidationError.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Per-class sample counts, indexed like kAllHistologies.
std::array<std::size_t, kHistologyCount> class_counts(const Dataset& ds);

// CSV I/O. Header: patient_id,site_id,histology,I_<ex>_<em>,... with the
// intensity columns in grid order. Values round-trip exactly.
Dataset load_dataset(const std::filesystem::path& path,
                     const WavelengthGrid& grid);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

// Splits into (train, test). `fraction` is the train share in (0, 1). When
// by_patient is set the split is over shuffled patients and no patient
// appears on both sides; otherwise it is over shuffled samples. The train
// side gets round(fraction * n) units, clamped so both sides are non-empty.
std::pair<Dataset, Dataset> split_train_test(const Dataset& ds,
                                             double fraction, bool by_patient,
                                             std::uint64_t seed);

}  // namespace fluorosil

#endif
