#include "fluorosil/synthetic.hpp"

#include <cmath>
#include <numeric>

#include "fluorosil/errors.hpp"
#include "fluorosil/rng.hpp"

namespace fluorosil {

namespace {

constexpr std::size_t kNs = 0;
constexpr std::size_t kNc = 1;
constexpr std::size_t kInfl = 2;
constexpr std::size_t kLg = 3;
constexpr std::size_t kHg = 4;

double band_value(const EmissionBand& band, double em) {
  const double d = (em - band.center_nm) / band.width_nm;
  return std::exp(-0.5 * d * d);
}

// Noiseless per-class intensity summed over a block's emission grid.
double integrated_intensity(const SynthConfig& cfg, const WavelengthGrid& grid,
                            std::size_t block, std::size_t cls) {
  double total = 0.0;
  for (int em : grid.emissions(block)) {
    for (std::size_t b = 0; b < cfg.bands[block].size(); ++b) {
      total += cfg.amplitudes[block][cls][b] * band_value(cfg.bands[block][b], em);
    }
  }
  return total;
}

SynthConfig base_config() {
  SynthConfig cfg;
  cfg.bands = {
      {{390.0, 42.0}, {460.0, 55.0}},   // 337 nm excitation
      {{440.0, 38.0}, {520.0, 60.0}},   // 380 nm excitation
      {{520.0, 42.0}, {600.0, 58.0}},   // 460 nm excitation
  };
  cfg.amplitudes.resize(3);
  // 337 nm: NS brightest, SILs intermediate, NC dimmest; SILs carry a
  // higher second-band share than NS. Inflammation keeps an NS-like band
  // share at reduced brightness.
  cfg.amplitudes[0][kNs] = {1.00, 0.55};
  cfg.amplitudes[0][kNc] = {0.30, 0.22};
  cfg.amplitudes[0][kInfl] = {0.72, 0.42};
  cfg.amplitudes[0][kLg] = {0.56, 0.46};
  cfg.amplitudes[0][kHg] = {0.52, 0.47};
  // 380 nm: LG weakest overall, NC and HG nearly coincide in brightness
  // but differ in band share.
  cfg.amplitudes[1][kNs] = {0.90, 0.60};
  cfg.amplitudes[1][kNc] = {0.44, 0.37};
  cfg.amplitudes[1][kInfl] = {0.66, 0.46};
  cfg.amplitudes[1][kLg] = {0.30, 0.27};
  cfg.amplitudes[1][kHg] = {0.45, 0.36};
  // 460 nm: same gross ordering as 337 nm.
  cfg.amplitudes[2][kNs] = {0.80, 0.50};
  cfg.amplitudes[2][kNc] = {0.25, 0.18};
  cfg.amplitudes[2][kInfl] = {0.60, 0.39};
  cfg.amplitudes[2][kLg] = {0.50, 0.36};
  cfg.amplitudes[2][kHg] = {0.46, 0.34};
  return cfg;
}

}  // namespace

SynthConfig SynthConfig::defaults() {
  SynthConfig cfg = base_config();
  cfg.class_counts = {94, 13, 15, 23, 35};
  return cfg;
}

SynthConfig SynthConfig::defaults_test() {
  SynthConfig cfg = base_config();
  cfg.class_counts = {94, 14, 14, 24, 35};
  cfg.seed = 43;
  cfg.patient_prefix = "T";
  return cfg;
}

void SynthConfig::validate(const WavelengthGrid& grid) const {
  if (bands.size() != grid.block_count() ||
      amplitudes.size() != grid.block_count()) {
    throw ValidationError(
        "synthetic config needs band and amplitude lists for every excitation");
  }
  for (std::size_t blk = 0; blk < bands.size(); ++blk) {
    for (std::size_t cls = 0; cls < kHistologyCount; ++cls) {
      if (amplitudes[blk][cls].size() != bands[blk].size()) {
        throw ValidationError("amplitude count mismatch in excitation block " +
                              std::to_string(blk));
      }
      for (double a : amplitudes[blk][cls]) {
        if (!(a >= 0.0) || !std::isfinite(a)) {
          throw ValidationError("band amplitudes must be finite and >= 0");
        }
      }
    }
    for (const auto& band : bands[blk]) {
      if (!(band.width_nm > 0.0)) {
        throw ValidationError("band widths must be positive");
      }
    }
  }
  if (!(patient_effect_scale >= 0.0) || !(site_noise_scale >= 0.0)) {
    throw ValidationError("noise scales must be >= 0");
  }
  if (sites_per_patient == 0) {
    throw ValidationError("sites_per_patient must be >= 1");
  }

  const std::size_t n_sil = class_counts[kLg] + class_counts[kHg];
  for (std::size_t blk = 0; blk < grid.block_count(); ++blk) {
    const int ex = grid.excitations()[blk];
    const double ns = integrated_intensity(*this, grid, blk, kNs);
    const double nc = integrated_intensity(*this, grid, blk, kNc);
    const double lg = integrated_intensity(*this, grid, blk, kLg);
    const double hg = integrated_intensity(*this, grid, blk, kHg);
    const double sil =
        n_sil > 0 ? (static_cast<double>(class_counts[kLg]) * lg +
                     static_cast<double>(class_counts[kHg]) * hg) /
                        static_cast<double>(n_sil)
                  : 0.5 * (lg + hg);
    if (ex == 337 || ex == 460) {
      if (!(ns > sil && sil > nc)) {
        throw ValidationError(
            "amplitudes violate required class ordering NS > SIL > NC at " +
            std::to_string(ex) + " nm excitation");
      }
    }
    if (ex == 380) {
      const double rel = std::fabs(nc - hg) / std::max(nc, hg);
      if (rel > 0.15) {
        throw ValidationError(
            "amplitudes violate NC ~ HG_SIL intensity match at 380 nm "
            "excitation (relative gap " +
            std::to_string(rel) + ")");
      }
    }
  }
}

Dataset synthesize_dataset(const SynthConfig& cfg) {
  return synthesize_dataset(cfg, WavelengthGrid::standard());
}

Dataset synthesize_dataset(const SynthConfig& cfg, const WavelengthGrid& grid) {
  cfg.validate(grid);

  const std::size_t total = std::accumulate(cfg.class_counts.begin(),
                                            cfg.class_counts.end(),
                                            std::size_t{0});
  if (total == 0) {
    throw ValidationError("synthetic config has zero samples");
  }

  Rng rng(cfg.seed);

  // Class labels, shuffled once, then dealt to patients in consecutive
  // groups of sites_per_patient.
  std::vector<Histology> labels;
  labels.reserve(total);
  for (std::size_t cls = 0; cls < kHistologyCount; ++cls) {
    for (std::size_t i = 0; i < cfg.class_counts[cls]; ++i) {
      labels.push_back(kAllHistologies[cls]);
    }
  }
  rng.shuffle(labels);

  const std::size_t n_patients =
      (total + cfg.sites_per_patient - 1) / cfg.sites_per_patient;

  // Per-patient, per-band multipliers, drawn patient-major.
  std::size_t band_total = 0;
  for (const auto& blk : cfg.bands) band_total += blk.size();
  std::vector<std::vector<double>> patient_mult(n_patients);
  for (std::size_t p = 0; p < n_patients; ++p) {
    patient_mult[p].resize(band_total);
    for (std::size_t b = 0; b < band_total; ++b) {
      patient_mult[p][b] = std::exp(cfg.patient_effect_scale * rng.normal());
    }
  }

  Dataset ds;
  ds.grid = grid;
  ds.samples.reserve(total);

  int id_width = 1;
  for (std::size_t v = n_patients; v >= 10; v /= 10) ++id_width;

  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t p = i / cfg.sites_per_patient;
    SpectralSample s;
    std::string pid = std::to_string(p + 1);
    s.patient_id = cfg.patient_prefix +
                   std::string(static_cast<std::size_t>(id_width) - pid.size(), '0') + pid;
    s.site_id = "s" + std::to_string(i % cfg.sites_per_patient + 1);
    s.histology = labels[i];
    const auto cls = static_cast<std::size_t>(s.histology);

    std::vector<double> site_mult(band_total);
    for (std::size_t b = 0; b < band_total; ++b) {
      site_mult[b] = std::exp(cfg.site_noise_scale * rng.normal());
    }

    s.intensities.resize(grid.pair_count());
    std::size_t band_base = 0;
    for (std::size_t blk = 0; blk < grid.block_count(); ++blk) {
      const auto& em_list = grid.emissions(blk);
      const std::size_t offset = grid.block_offset(blk);
      for (std::size_t e = 0; e < em_list.size(); ++e) {
        double v = 0.0;
        for (std::size_t b = 0; b < cfg.bands[blk].size(); ++b) {
          v += cfg.amplitudes[blk][cls][b] * patient_mult[p][band_base + b] *
               site_mult[band_base + b] *
               band_value(cfg.bands[blk][b], em_list[e]);
        }
        s.intensities[offset + e] = v;
      }
      band_base += cfg.bands[blk].size();
    }
    ds.samples.push_back(std::move(s));
  }

  ds.validate();
  return ds;
}

}  // namespace fluorosil
