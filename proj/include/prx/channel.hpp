#pragma once

#include <array>
#include <cstdint>

#include "prx/sigkit.hpp"

namespace prx {

// Fiber link model: bulk chromatic dispersion, first-order PMD (a single DGD
// element), a random unitary polarization rotation, and additive ASE loaded
// to a target OSNR. osnr_db = +inf means a noiseless link.
struct LinkConfig {
  double total_dispersion_ps_nm = 0.0;
  std::uint64_t jones_seed = 0;
  double dgd_ps = 0.0;
  double osnr_db = std::numeric_limits<double>::infinity();
  double center_wavelength_nm = 1550.0;
  std::uint64_t noise_seed = 0;
};

void validate(const LinkConfig& cfg);

// Row-major 2x2 complex matrix: m[0]=xx, m[1]=xy, m[2]=yx, m[3]=yy.
using Jones = std::array<cplx, 4>;

// Haar-distributed random unitary from a seeded Gaussian ensemble
// (Gram-Schmidt with the R-diagonal phase convention).
Jones random_unitary_jones(std::uint64_t seed);

Jones jones_identity();
Jones jones_hermitian(const Jones& j);
Jones jones_multiply(const Jones& a, const Jones& b);

// Apply CD to both polarizations, split the DGD delay symmetrically between
// them (+-dgd/2), then mix through the Jones rotation. Deterministic.
DualPolFrame propagate(const DualPolFrame& tx, const LinkConfig& cfg);

// Add white circular Gaussian noise, independent per polarization, scaled so
// that total signal power over total noise PSD referred to the standard
// reference bandwidth equals the requested OSNR.
DualPolFrame load_ase_noise(const DualPolFrame& in, double osnr_db,
                            std::uint64_t seed);

// Periodogram-based OSNR estimate used for self-checks: total in-band signal
// power over the noise PSD measured in a signal-free guard band.
double estimate_osnr_db(const DualPolFrame& noisy, const DualPolFrame& clean);

}  // namespace prx
