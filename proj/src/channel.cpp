#include "prx/channel.hpp"

#include <cmath>
#include <limits>

#include "prx/fft.hpp"
#include "prx/rng.hpp"

namespace prx {

void validate(const LinkConfig& cfg) {
  DispersionSpec d{cfg.total_dispersion_ps_nm, cfg.center_wavelength_nm};
  validate(d);
  if (!(cfg.dgd_ps >= 0.0) || !std::isfinite(cfg.dgd_ps)) {
    throw config_error("link.dgd_ps: must be finite and non-negative");
  }
  if (std::isnan(cfg.osnr_db)) {
    throw config_error("link.osnr_db: must be a number or +inf");
  }
}

Jones jones_identity() {
  return {cplx(1.0, 0.0), cplx(0.0, 0.0), cplx(0.0, 0.0), cplx(1.0, 0.0)};
}

Jones random_unitary_jones(std::uint64_t seed) {
  if (seed == 0) return jones_identity();
  std::mt19937_64 rng(seed);
  // Row-major Gaussian draw, then Gram-Schmidt on the columns. Orthonormal-
  // izing a complex Gaussian matrix with the positive-diagonal-R convention
  // yields a Haar-distributed unitary.
  const cplx z00 = gaussian_cplx(rng), z01 = gaussian_cplx(rng);
  const cplx z10 = gaussian_cplx(rng), z11 = gaussian_cplx(rng);
  const double r00 = std::sqrt(std::norm(z00) + std::norm(z10));
  const cplx q00 = z00 / r00, q10 = z10 / r00;
  const cplx proj = std::conj(q00) * z01 + std::conj(q10) * z11;
  const cplx v0 = z01 - proj * q00, v1 = z11 - proj * q10;
  const double r11 = std::sqrt(std::norm(v0) + std::norm(v1));
  return {q00, v0 / r11, q10, v1 / r11};
}

Jones jones_hermitian(const Jones& j) {
  return {std::conj(j[0]), std::conj(j[2]), std::conj(j[1]), std::conj(j[3])};
}

Jones jones_multiply(const Jones& a, const Jones& b) {
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
          a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

namespace {

void check_dual(const DualPolFrame& f, const char* op) {
  if (f.x.samples.empty() || f.y.samples.empty()) {
    throw config_error(std::string(op) + ": empty frame");
  }
  if (f.x.samples.size() != f.y.samples.size() ||
      f.x.sample_rate_hz != f.y.sample_rate_hz) {
    throw config_error(std::string(op) +
                       ": polarizations must share length and sample rate");
  }
  if (!(f.x.sample_rate_hz > 0.0)) {
    throw config_error(std::string(op) + ": sample rate must be positive");
  }
}

// Symmetric DGD element: x picks up -tau/2 group delay, y picks up +tau/2.
void apply_dgd(DualPolFrame& f, double dgd_ps) {
  if (dgd_ps == 0.0) return;
  const double tau_s = dgd_ps * 1e-12;
  const std::size_t n = f.x.samples.size();
  const rvec freqs = fft_freqs(n, f.x.sample_rate_hz);
  cvec sx = fft::forward(f.x.samples);
  cvec sy = fft::forward(f.y.samples);
  for (std::size_t k = 0; k < n; ++k) {
    const double ph = kPi * freqs[k] * tau_s;
    const cplx rot(std::cos(ph), std::sin(ph));
    sx[k] *= std::conj(rot);
    sy[k] *= rot;
  }
  f.x.samples = fft::inverse(sx);
  f.y.samples = fft::inverse(sy);
}

}  // namespace

DualPolFrame propagate(const DualPolFrame& tx, const LinkConfig& cfg) {
  check_dual(tx, "propagate");
  validate(cfg);
  const DispersionSpec cd{cfg.total_dispersion_ps_nm, cfg.center_wavelength_nm};
  DualPolFrame out;
  out.x = apply_dispersion(tx.x, cd);
  out.y = apply_dispersion(tx.y, cd);
  apply_dgd(out, cfg.dgd_ps);
  const Jones j = random_unitary_jones(cfg.jones_seed);
  if (cfg.jones_seed != 0) {
    const std::size_t n = out.x.samples.size();
    for (std::size_t i = 0; i < n; ++i) {
      const cplx xs = out.x.samples[i];
      const cplx ys = out.y.samples[i];
      out.x.samples[i] = j[0] * xs + j[1] * ys;
      out.y.samples[i] = j[2] * xs + j[3] * ys;
    }
  }
  return out;
}

DualPolFrame load_ase_noise(const DualPolFrame& in, double osnr_db,
                            std::uint64_t seed) {
  check_dual(in, "load_ase_noise");
  if (std::isinf(osnr_db) && osnr_db > 0.0) return in;
  if (!std::isfinite(osnr_db)) {
    throw config_error("load_ase_noise: osnr_db must be finite or +inf");
  }
  const double p_total =
      mean_power(in.x.samples) + mean_power(in.y.samples);
  if (!(p_total > 0.0)) {
    throw config_error("load_ase_noise: zero-power input");
  }
  const double osnr_lin = undb10(osnr_db);
  // Per-polarization noise PSD such that P_total / (2 * Bref * N) hits the
  // requested OSNR; white over the full simulation band.
  const double n_psd = p_total / (2.0 * osnr_lin * kOsnrRefBandwidthHz);
  const double sigma = std::sqrt(n_psd * in.x.sample_rate_hz);
  std::mt19937_64 rng(seed);
  DualPolFrame out = in;
  for (cplx& v : out.x.samples) v += sigma * gaussian_cplx(rng);
  for (cplx& v : out.y.samples) v += sigma * gaussian_cplx(rng);
  return out;
}

double estimate_osnr_db(const DualPolFrame& noisy, const DualPolFrame& clean) {
  check_dual(noisy, "estimate_osnr_db");
  check_dual(clean, "estimate_osnr_db");
  const std::size_t n = noisy.x.samples.size();
  const double fs = noisy.x.sample_rate_hz;
  const rvec freqs = fft_freqs(n, fs);
  const cvec sx = fft::forward(noisy.x.samples);
  const cvec sy = fft::forward(noisy.y.samples);
  // Noise PSD from a signal-free guard band in the outer quarter of the
  // spectrum (the transmit band is far narrower than the simulation band).
  double acc = 0.0;
  std::size_t count = 0;
  const double guard = 0.75 * fs / 2.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (std::abs(freqs[k]) > guard) {
      acc += std::norm(sx[k]) + std::norm(sy[k]);
      count += 2;
    }
  }
  if (count == 0) throw pipeline_error("estimate_osnr_db: no guard band");
  const double n_psd = (acc / static_cast<double>(count)) / fs;
  const double p_sig =
      mean_power(clean.x.samples) + mean_power(clean.y.samples);
  return db10(p_sig / (2.0 * n_psd * kOsnrRefBandwidthHz));
}

}  // namespace prx
