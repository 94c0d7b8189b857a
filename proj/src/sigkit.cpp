#include "prx/sigkit.hpp"

#include <algorithm>
#include <cmath>

#include "prx/fft.hpp"

namespace prx {

void validate(const DispersionSpec& spec) {
  if (!std::isfinite(spec.dispersion_ps_nm)) {
    throw config_error("dispersion: dispersion_ps_nm must be finite");
  }
  if (!(spec.center_wavelength_nm >= 1000.0 &&
        spec.center_wavelength_nm <= 2000.0)) {
    throw config_error(
        "dispersion: center_wavelength_nm must lie in [1000, 2000] nm");
  }
}

void validate(const SpectralSupport& support, double sample_rate_hz) {
  if (!(sample_rate_hz > 0.0)) {
    throw config_error("spectral support: sample rate must be positive");
  }
  if (!std::isfinite(support.low_hz) || !std::isfinite(support.high_hz) ||
      !(support.low_hz < support.high_hz)) {
    throw config_error("spectral support: require low_hz < high_hz, finite");
  }
  const double nyq = sample_rate_hz / 2.0;
  if (support.low_hz < -nyq || support.high_hz > nyq) {
    throw config_error(
        "spectral support: band exceeds the representable [-fs/2, fs/2]");
  }
}

rvec fft_freqs(std::size_t n, double sample_rate_hz) {
  if (n == 0) throw config_error("fft_freqs: n must be positive");
  if (!(sample_rate_hz > 0.0)) {
    throw config_error("fft_freqs: sample rate must be positive");
  }
  rvec f(n);
  const double df = sample_rate_hz / static_cast<double>(n);
  const std::size_t half = (n + 1) / 2;  // number of non-negative bins
  for (std::size_t k = 0; k < half; ++k) f[k] = df * static_cast<double>(k);
  for (std::size_t k = half; k < n; ++k) {
    f[k] = df * (static_cast<double>(k) - static_cast<double>(n));
  }
  return f;
}

cvec dispersion_transfer(std::size_t n, double sample_rate_hz,
                         const DispersionSpec& spec) {
  validate(spec);
  const rvec f = fft_freqs(n, sample_rate_hz);
  // Accumulated dispersion in SI: 1 ps/nm = 1e-3 s/m.
  const double d_si = spec.dispersion_ps_nm * 1e-3;
  const double lambda_m = spec.center_wavelength_nm * 1e-9;
  const double coef = kPi * d_si * lambda_m * lambda_m / kLightSpeedMps;
  cvec h(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double phase = coef * f[k] * f[k];
    h[k] = cplx(std::cos(phase), std::sin(phase));
  }
  return h;
}

namespace {

void check_frame(const ComplexFrame& frame, const char* op) {
  if (frame.samples.empty()) {
    throw config_error(std::string(op) + ": empty frame");
  }
  if (!(frame.sample_rate_hz > 0.0)) {
    throw config_error(std::string(op) + ": sample rate must be positive");
  }
}

ComplexFrame disperse(const ComplexFrame& in, const DispersionSpec& spec,
                      bool invert) {
  check_frame(in, "apply_dispersion");
  validate(spec);
  // Zero accumulated dispersion is the identity; return the input untouched
  // rather than paying a round-trip through the FFT's rounding.
  if (spec.dispersion_ps_nm == 0.0) return in;
  cvec spec_v = fft::forward(in.samples);
  const cvec h = dispersion_transfer(in.samples.size(), in.sample_rate_hz, spec);
  for (std::size_t k = 0; k < spec_v.size(); ++k) {
    spec_v[k] *= invert ? std::conj(h[k]) : h[k];
  }
  ComplexFrame out;
  out.sample_rate_hz = in.sample_rate_hz;
  out.samples = fft::inverse(spec_v);
  return out;
}

}  // namespace

ComplexFrame apply_dispersion(const ComplexFrame& in, const DispersionSpec& spec) {
  return disperse(in, spec, false);
}

ComplexFrame invert_dispersion(const ComplexFrame& in, const DispersionSpec& spec) {
  return disperse(in, spec, true);
}

std::vector<char> support_mask(std::size_t n, double sample_rate_hz,
                               const SpectralSupport& support) {
  validate(support, sample_rate_hz);
  const rvec f = fft_freqs(n, sample_rate_hz);
  std::vector<char> mask(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    mask[k] = (f[k] >= support.low_hz && f[k] <= support.high_hz) ? 1 : 0;
  }
  return mask;
}

ComplexFrame project_spectral_support(const ComplexFrame& in,
                                      const SpectralSupport& support) {
  check_frame(in, "project_spectral_support");
  const std::vector<char> mask =
      support_mask(in.samples.size(), in.sample_rate_hz, support);
  cvec spec_v = fft::forward(in.samples);
  for (std::size_t k = 0; k < spec_v.size(); ++k) {
    if (!mask[k]) spec_v[k] = 0.0;
  }
  ComplexFrame out;
  out.sample_rate_hz = in.sample_rate_hz;
  out.samples = fft::inverse(spec_v);
  return out;
}

double mean_power(const cvec& x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (const cplx& v : x) acc += std::norm(v);
  return acc / static_cast<double>(x.size());
}

double frame_energy(const ComplexFrame& frame) {
  double acc = 0.0;
  for (const cplx& v : frame.samples) acc += std::norm(v);
  return acc;
}

rvec resample_real(const rvec& x, double in_rate_hz, double out_rate_hz) {
  if (x.empty()) throw config_error("resample_real: empty input");
  if (!(in_rate_hz > 0.0) || !(out_rate_hz > 0.0)) {
    throw config_error("resample_real: rates must be positive");
  }
  if (in_rate_hz == out_rate_hz) return x;
  const std::size_t n = x.size();
  const double m_exact = static_cast<double>(n) * out_rate_hz / in_rate_hz;
  const std::size_t m = static_cast<std::size_t>(std::llround(m_exact));
  if (std::abs(m_exact - static_cast<double>(m)) > 1e-6 || m == 0) {
    throw config_error(
        "resample_real: rate ratio must map the frame to a whole number of "
        "samples");
  }
  cvec in_c(n);
  for (std::size_t i = 0; i < n; ++i) in_c[i] = x[i];
  const cvec v = fft::forward(in_c);
  cvec w(m, cplx(0.0, 0.0));
  const std::size_t h = std::min(n, m) / 2;
  for (std::size_t k = 0; k < h; ++k) w[k] = v[k];
  for (std::size_t k = 1; k <= h; ++k) w[m - k] = v[n - k];
  const cvec y = fft::inverse(w);
  const double scale = std::sqrt(static_cast<double>(m) / static_cast<double>(n));
  rvec out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = y[i].real() * scale;
  return out;
}

}  // namespace prx
