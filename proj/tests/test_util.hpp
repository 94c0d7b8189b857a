#pragma once

#include <prx/common.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <string>

namespace prx::testutil {

inline double max_abs_diff(const cvec& a, const cvec& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double rms(const cvec& a) {
  double s = 0.0;
  for (const auto& v : a) s += std::norm(v);
  return a.empty() ? 0.0 : std::sqrt(s / static_cast<double>(a.size()));
}

inline double rel_rms_diff(const cvec& a, const cvec& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

inline cvec random_field(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  cvec out(n);
  for (auto& v : out) v = cplx(dist(gen), dist(gen)) / std::sqrt(2.0);
  return out;
}

// Complex tone on an exact FFT bin so spectral operations act on a single bin.
inline cvec tone(std::size_t n, std::size_t bin, double amplitude = 1.0) {
  cvec out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double phase = 2.0 * kPi * static_cast<double>(bin) * static_cast<double>(i) /
                         static_cast<double>(n);
    out[i] = amplitude * std::polar(1.0, phase);
  }
  return out;
}

// Scratch directory for tests that write files.
inline std::string scratch_dir(const std::string& leaf) {
  const char* base = std::getenv("TMPDIR");
  std::string root = base != nullptr ? base : "/tmp";
  return root + "/prx_test_" + leaf;
}

}  // namespace prx::testutil
