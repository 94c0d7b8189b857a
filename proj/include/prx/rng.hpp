#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "prx/common.hpp"

namespace prx {

// All randomness flows through these helpers on top of std::mt19937_64.
// The standard <random> distributions are implementation-defined, so seeded
// runs would differ between standard libraries; these transforms are exact
// functions of the raw engine output and therefore reproduce everywhere.

// Uniform double in [0, 1) with 53 significant bits.
inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform_phase(std::mt19937_64& g) {
  return 2.0 * kPi * uniform01(g);
}

// Standard normal via Box-Muller (cosine branch only, so one draw consumes
// exactly two engine outputs regardless of call pattern).
inline double gaussian(std::mt19937_64& g) {
  double u1 = uniform01(g);
  while (u1 <= 0.0) u1 = uniform01(g);
  const double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

// Circular complex normal with E|z|^2 = 1.
inline cplx gaussian_cplx(std::mt19937_64& g) {
  const double re = gaussian(g);
  const double im = gaussian(g);
  return cplx(re, im) * std::sqrt(0.5);
}

}  // namespace prx
