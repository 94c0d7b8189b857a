#include <doctest.h>

#include <prx/channel.hpp>
#include <prx/fft.hpp>
#include <prx/txgen.hpp>

#include <cmath>
#include <limits>

#include "test_util.hpp"

using namespace prx;
using testutil::max_abs_diff;
using testutil::random_field;
using testutil::rel_rms_diff;

namespace {

DualPolFrame random_dual(std::size_t n, double fs, std::uint64_t seed) {
  DualPolFrame f;
  f.x.samples = random_field(n, seed);
  f.y.samples = random_field(n, seed + 1);
  f.x.sample_rate_hz = fs;
  f.y.sample_rate_hz = fs;
  return f;
}

DualPolFrame shaped_dual(std::size_t n_symbols, std::uint64_t seed) {
  TxConfig cfg;
  cfg.baud_rate_hz = 30e9;
  cfg.samples_per_symbol = 2;
  cfg.rolloff = 0.1;
  cfg.n_symbols = n_symbols;
  cfg.pilot_fraction = 0.1;
  cfg.seed = seed;
  const DualPolSymbols tx = generate_dual_pol(cfg);
  DualPolFrame f;
  f.x = pulse_shape(tx.x.symbols, cfg);
  f.y = pulse_shape(tx.y.symbols, cfg);
  return f;
}

double dual_energy(const DualPolFrame& f) {
  return frame_energy(f.x) + frame_energy(f.y);
}

}  // namespace

TEST_CASE("random jones matrices are unitary and deterministic") {
  for (const std::uint64_t seed : {1ull, 77ull, 123456789ull}) {
    const Jones j = random_unitary_jones(seed);
    const Jones jh = jones_hermitian(j);
    const Jones prod = jones_multiply(jh, j);
    const Jones eye = jones_identity();
    for (int k = 0; k < 4; ++k) {
      CHECK(std::abs(prod[k] - eye[k]) < 1e-12);
    }
    const Jones again = random_unitary_jones(seed);
    for (int k = 0; k < 4; ++k) CHECK(j[k] == again[k]);
  }
  const Jones a = random_unitary_jones(5);
  const Jones b = random_unitary_jones(6);
  double diff = 0.0;
  for (int k = 0; k < 4; ++k) diff += std::abs(a[k] - b[k]);
  CHECK(diff > 1e-3);
}

TEST_CASE("seed zero selects the identity rotation") {
  const Jones j = random_unitary_jones(0);
  const Jones eye = jones_identity();
  for (int k = 0; k < 4; ++k) CHECK(j[k] == eye[k]);
}

TEST_CASE("ensemble averaged jones entries match the uniform distribution") {
  // For a Haar-distributed 2x2 unitary, E|U00|^2 = 1/2.
  double acc = 0.0;
  const int trials = 2000;
  for (int t = 1; t <= trials; ++t) {
    acc += std::norm(random_unitary_jones(static_cast<std::uint64_t>(t))[0]);
  }
  CHECK(acc / trials == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("dispersion only propagation matches the scalar operator per polarization") {
  const DualPolFrame tx = random_dual(2048, 60e9, 42);
  LinkConfig cfg;
  cfg.total_dispersion_ps_nm = 8921.0;
  const DualPolFrame rx = propagate(tx, cfg);
  const DispersionSpec cd{cfg.total_dispersion_ps_nm, cfg.center_wavelength_nm};
  CHECK(max_abs_diff(rx.x.samples, apply_dispersion(tx.x, cd).samples) == 0.0);
  CHECK(max_abs_diff(rx.y.samples, apply_dispersion(tx.y, cd).samples) == 0.0);
}

TEST_CASE("an all zero link is a bit exact passthrough") {
  const DualPolFrame tx = random_dual(512, 60e9, 9);
  const LinkConfig cfg;  // defaults: no CD, no DGD, identity rotation, no noise
  const DualPolFrame rx = propagate(tx, cfg);
  CHECK(max_abs_diff(rx.x.samples, tx.x.samples) == 0.0);
  CHECK(max_abs_diff(rx.y.samples, tx.y.samples) == 0.0);
}

TEST_CASE("group delay splits symmetrically as a circular shift") {
  const std::size_t n = 1024;
  const double fs = 60e9;
  const DualPolFrame tx = random_dual(n, fs, 31);
  LinkConfig cfg;
  // tau/2 equals exactly one sample period at 60 GS/s.
  cfg.dgd_ps = 2.0 * 1e12 / fs;
  const DualPolFrame rx = propagate(tx, cfg);
  double worst_x = 0.0;
  double worst_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    worst_x = std::max(worst_x, std::abs(rx.x.samples[i] - tx.x.samples[(i + n - 1) % n]));
    worst_y = std::max(worst_y, std::abs(rx.y.samples[i] - tx.y.samples[(i + 1) % n]));
  }
  CHECK(worst_x < 1e-10);
  CHECK(worst_y < 1e-10);
}

TEST_CASE("polarization mixing applies the jones matrix pointwise") {
  const DualPolFrame tx = random_dual(256, 60e9, 8);
  LinkConfig cfg;
  cfg.jones_seed = 77;
  const DualPolFrame rx = propagate(tx, cfg);
  const Jones j = random_unitary_jones(cfg.jones_seed);
  double worst = 0.0;
  for (std::size_t i = 0; i < tx.x.samples.size(); ++i) {
    const cplx ex = j[0] * tx.x.samples[i] + j[1] * tx.y.samples[i];
    const cplx ey = j[2] * tx.x.samples[i] + j[3] * tx.y.samples[i];
    worst = std::max(worst, std::abs(rx.x.samples[i] - ex));
    worst = std::max(worst, std::abs(rx.y.samples[i] - ey));
  }
  CHECK(worst == 0.0);
}

TEST_CASE("the noiseless channel is unitary and analytically invertible") {
  const DualPolFrame tx = random_dual(2048, 60e9, 12);
  LinkConfig cfg;
  cfg.total_dispersion_ps_nm = 8921.0;
  cfg.jones_seed = 77;
  cfg.dgd_ps = 5.0;
  const DualPolFrame rx = propagate(tx, cfg);
  CHECK(dual_energy(rx) == doctest::Approx(dual_energy(tx)).epsilon(1e-12));

  // Undo the rotation, the group delay (by swapping the polarizations around
  // a forward DGD element), and the dispersion, in reverse order.
  const Jones jh = jones_hermitian(random_unitary_jones(cfg.jones_seed));
  DualPolFrame undone = rx;
  for (std::size_t i = 0; i < rx.x.samples.size(); ++i) {
    undone.x.samples[i] = jh[0] * rx.x.samples[i] + jh[1] * rx.y.samples[i];
    undone.y.samples[i] = jh[2] * rx.x.samples[i] + jh[3] * rx.y.samples[i];
  }
  LinkConfig dgd_only;
  dgd_only.dgd_ps = cfg.dgd_ps;
  std::swap(undone.x, undone.y);
  undone = propagate(undone, dgd_only);
  std::swap(undone.x, undone.y);
  const DispersionSpec cd{cfg.total_dispersion_ps_nm, cfg.center_wavelength_nm};
  undone.x = invert_dispersion(undone.x, cd);
  undone.y = invert_dispersion(undone.y, cd);

  CHECK(rel_rms_diff(undone.x.samples, tx.x.samples) < 1e-9);
  CHECK(rel_rms_diff(undone.y.samples, tx.y.samples) < 1e-9);
}

TEST_CASE("noise loading hits the requested osnr") {
  const DualPolFrame clean = shaped_dual(8192, 3);
  const DualPolFrame noisy = load_ase_noise(clean, 20.0, 555);
  const double est = estimate_osnr_db(noisy, clean);
  CHECK(est == doctest::Approx(20.0).epsilon(0.01));

  // Same seed reproduces the noise exactly; different seed does not.
  const DualPolFrame again = load_ase_noise(clean, 20.0, 555);
  CHECK(max_abs_diff(noisy.x.samples, again.x.samples) == 0.0);
  const DualPolFrame other = load_ase_noise(clean, 20.0, 556);
  CHECK(max_abs_diff(noisy.x.samples, other.x.samples) > 0.0);
}

TEST_CASE("infinite osnr adds no noise") {
  const DualPolFrame clean = shaped_dual(1024, 4);
  const DualPolFrame out =
      load_ase_noise(clean, std::numeric_limits<double>::infinity(), 1);
  CHECK(max_abs_diff(out.x.samples, clean.x.samples) == 0.0);
  CHECK(max_abs_diff(out.y.samples, clean.y.samples) == 0.0);
}

TEST_CASE("loaded noise is white and independent across polarizations") {
  DualPolFrame zero;
  zero.x.samples.assign(32768, cplx(1.0, 0.0));  // flat reference power
  zero.y.samples.assign(32768, cplx(1.0, 0.0));
  zero.x.sample_rate_hz = 60e9;
  zero.y.sample_rate_hz = 60e9;
  const DualPolFrame noisy = load_ase_noise(zero, 10.0, 777);
  cvec nx(32768), ny(32768);
  for (std::size_t i = 0; i < nx.size(); ++i) {
    nx[i] = noisy.x.samples[i] - zero.x.samples[i];
    ny[i] = noisy.y.samples[i] - zero.y.samples[i];
  }

  // Cross-correlation between polarizations is consistent with zero.
  cplx cross(0.0, 0.0);
  double px = 0.0;
  double py = 0.0;
  for (std::size_t i = 0; i < nx.size(); ++i) {
    cross += nx[i] * std::conj(ny[i]);
    px += std::norm(nx[i]);
    py += std::norm(ny[i]);
  }
  CHECK(std::abs(cross) / std::sqrt(px * py) < 0.03);

  // Spectrum is flat: each of 8 bands holds close to 1/8 of the energy.
  const cvec spec = fft::forward(nx);
  double total = 0.0;
  for (const auto& v : spec) total += std::norm(v);
  const std::size_t seg = spec.size() / 8;
  for (int b = 0; b < 8; ++b) {
    double e = 0.0;
    for (std::size_t k = b * seg; k < (b + 1) * seg; ++k) e += std::norm(spec[k]);
    CHECK(e / total == doctest::Approx(1.0 / 8.0).epsilon(0.10));
  }
}

TEST_CASE("link validation rejects bad parameters") {
  LinkConfig cfg;
  cfg.dgd_ps = -1.0;
  CHECK_THROWS_AS(validate(cfg), config_error);
  cfg = LinkConfig{};
  cfg.osnr_db = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(validate(cfg), config_error);
  cfg = LinkConfig{};
  cfg.center_wavelength_nm = 10.0;
  CHECK_THROWS_AS(validate(cfg), config_error);
  CHECK_NOTHROW(validate(LinkConfig{}));
}
