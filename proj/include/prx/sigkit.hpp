#pragma once

#include "prx/common.hpp"

namespace prx {

// A uniformly sampled complex baseband waveform.
struct ComplexFrame {
  cvec samples;
  double sample_rate_hz = 0.0;
};

struct DualPolFrame {
  ComplexFrame x;
  ComplexFrame y;
};

// Chromatic dispersion expressed the way link budgets quote it: accumulated
// dispersion in ps/nm at a given carrier wavelength.
struct DispersionSpec {
  double dispersion_ps_nm = 0.0;
  double center_wavelength_nm = 1550.0;
};

// Closed frequency band [low_hz, high_hz] around baseband.
struct SpectralSupport {
  double low_hz = 0.0;
  double high_hz = 0.0;
};

void validate(const DispersionSpec& spec);
void validate(const SpectralSupport& support, double sample_rate_hz);

// FFT-bin center frequencies for an n-point transform at the given rate,
// in natural FFT order (DC first, then positive, then negative frequencies).
rvec fft_freqs(std::size_t n, double sample_rate_hz);

// All-pass transfer function exp(+j*pi*(D*lambda^2/c)*f^2) evaluated on the
// n-point FFT grid. Applying it advances the waveform through the dispersive
// element; its conjugate undoes it exactly.
cvec dispersion_transfer(std::size_t n, double sample_rate_hz,
                         const DispersionSpec& spec);

ComplexFrame apply_dispersion(const ComplexFrame& in, const DispersionSpec& spec);
ComplexFrame invert_dispersion(const ComplexFrame& in, const DispersionSpec& spec);

// Zero every FFT bin whose center frequency lies outside [low_hz, high_hz]
// (band edges inclusive).
ComplexFrame project_spectral_support(const ComplexFrame& in,
                                      const SpectralSupport& support);

// Boolean keep-mask for the same projection, on the n-point FFT grid.
std::vector<char> support_mask(std::size_t n, double sample_rate_hz,
                               const SpectralSupport& support);

double mean_power(const cvec& x);
double frame_energy(const ComplexFrame& frame);

// Band-limited sample-rate conversion of a real sequence by spectral
// truncation / zero-padding. Amplitude-preserving: a tone below both Nyquist
// rates keeps its amplitude.
rvec resample_real(const rvec& x, double in_rate_hz, double out_rate_hz);

}  // namespace prx
