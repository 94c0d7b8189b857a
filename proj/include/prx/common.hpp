#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace prx {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;
using rvec = std::vector<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kLightSpeedMps = 299792458.0;

// OSNR reference bandwidth: 0.1 nm at 1550 nm expressed in Hz.
inline constexpr double kOsnrRefBandwidthHz = 12.49e9;

// Invalid or inconsistent configuration detected before any processing runs.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Failure while executing a processing stage on accepted configuration.
struct pipeline_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double db10(double linear) { return 10.0 * std::log10(linear); }
inline double undb10(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace prx
