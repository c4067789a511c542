#ifndef FLUOROSIL_SYNTHETIC_HPP
#define FLUOROSIL_SYNTHETIC_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fluorosil/spectra.hpp"

namespace fluorosil {

// One Gaussian emission band: intensity(em) = exp(-(em-center)^2 / (2 width^2)).
struct EmissionBand {
  double center_nm = 0.0;
  double width_nm = 1.0;
};

// Parameters of the synthetic data generator. A sample's spectrum within an
// excitation block is a sum of that block's bands, each scaled by the class
// amplitude, a per-patient band multiplier exp(patient_effect_scale * z) and
// a per-site band multiplier exp(site_noise_scale * z). Zero scales make all
// samples of a class identical.
struct SynthConfig {
  // Per-class sample counts, indexed like kAllHistologies (NS, NC, INFL,
  // LG_SIL, HG_SIL).
  std::array<std::size_t, kHistologyCount> class_counts{};

  // bands[block] lists the emission bands of that excitation block;
  // amplitudes[block][class][band] scales them per class.
  std::vector<std::vector<EmissionBand>> bands;
  std::vector<std::array<std::vector<double>, kHistologyCount>> amplitudes;

  double patient_effect_scale = 0.22;
  double site_noise_scale = 0.16;
  std::size_t sites_per_patient = 4;
  std::uint64_t seed = 42;
  std::string patient_prefix = "P";

  // Calibrated defaults: class counts from the 180-sample training split
  // (94/13/15/23/35) and band amplitudes satisfying the class intensity
  // orderings on the standard grid.
  static SynthConfig defaults();
  // Same band model with the 181-sample test split counts (94/14/14/24/35).
  static SynthConfig defaults_test();

  // Checks the class-intensity ordering constraints against the noiseless
  // band model: mean SIL < NS and > NC at 337 and 460 nm (emission-integrated)
  // and NC ~ HG_SIL at 380 nm. Throws ValidationError when infeasible.
  void validate(const WavelengthGrid& grid) const;
};

// Deterministic for a fixed config. Uses the standard grid.
Dataset synthesize_dataset(const SynthConfig& cfg);
Dataset synthesize_dataset(const SynthConfig& cfg, const WavelengthGrid& grid);

}  // namespace fluorosil

#endif
