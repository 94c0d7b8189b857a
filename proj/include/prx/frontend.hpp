#pragma once

#include <array>
#include <cstdint>

#include "prx/sigkit.hpp"

namespace prx {

enum class AdcMode {
  point,        // instantaneous (sample-decimating) converter
  bandlimited,  // brick-wall anti-alias filter before sampling
};

// Photodiode bank: per polarization, one direct intensity and one intensity
// behind a known intra-receiver dispersive element. A receiver optical
// bandpass ahead of the detectors confines the field to its design band so
// the sampled intensities stay consistent with a band-limited field;
// optical_bandwidth_hz <= 0 disables it.
struct FrontendConfig {
  double element_dispersion_ps_nm = 650.0;
  double adc_rate_hz = 60e9;
  double electrical_snr_db = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
  double optical_bandwidth_hz = 0.0;
  AdcMode adc_mode = AdcMode::point;
  double center_wavelength_nm = 1550.0;
};

void validate(const FrontendConfig& cfg);

// The four detected photocurrents, each a non-negative real sequence on a
// shared clock. aliased_energy_fraction records, per channel, how much AC
// intensity energy sat above the output Nyquist frequency before sampling.
struct IntensityQuad {
  rvec a_x;  // |x|^2
  rvec b_x;  // |D x|^2
  rvec a_y;  // |y|^2
  rvec b_y;  // |D y|^2
  double sample_rate_hz = 0.0;
  std::array<double, 4> aliased_energy_fraction{0.0, 0.0, 0.0, 0.0};
};

// Square-law detection of both polarizations at the incoming sample rate
// (before any ADC). Applies the optical bandpass, forms the four
// intensities, and adds electrical noise if configured.
IntensityQuad detect(const DualPolFrame& rx, const FrontendConfig& cfg);

// Fraction of a real sequence's AC spectral energy above target_rate/2.
double aliased_energy_fraction(const rvec& x, double sample_rate_hz,
                               double target_rate_hz);

// Rate conversion of all four channels down to the ADC clock.
// point mode keeps every k-th sample (integer ratio required); bandlimited
// mode applies spectral truncation. Both record the pre-conversion aliased
// energy fraction; undersampling is flagged there rather than rejected.
IntensityQuad adc_convert(const IntensityQuad& in, const FrontendConfig& cfg);

}  // namespace prx
