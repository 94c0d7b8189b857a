#pragma once

#include "prx/txgen.hpp"

namespace prx {

// Gaussian tail probability Q(x).
double q_function(double x);

// Symbol SNR (Es/N0, linear) implied by an OSNR for an n_pol-multiplexed
// signal at the given baud rate, under the standard reference-bandwidth
// convention.
double osnr_to_snr(double osnr_db, double baud_rate_hz, int n_polarizations);

// Matched-filter bit error ratio for Gray-mapped formats at a given OSNR.
double qpsk_theory_ber(double osnr_db, double baud_rate_hz, int n_polarizations);
double theory_ber(ModFormat fmt, double osnr_db, double baud_rate_hz,
                  int n_polarizations);

// Monte-Carlo matched-filter baseline for the same convention (QPSK),
// used to cross-check the closed form.
double mc_qpsk_ber(double osnr_db, double baud_rate_hz, int n_polarizations,
                   std::size_t n_symbols, std::uint64_t seed);

struct BerReport {
  double ber = 0.0;
  std::size_t bit_errors = 0;
  std::size_t bit_count = 0;
  double ber_x = 0.0;
  double ber_y = 0.0;
  int rotation_x = 0;   // quarter turns applied to x
  int rotation_y = 0;
  bool swapped = false; // polarization streams crossed
};

// Data-aided BER against the transmitted record, excluding pilot symbols.
// Each polarization may carry an arbitrary quarter-turn rotation (a blind
// phase ambiguity of the square constellations) and the pair may arrive
// swapped; the report scores the best of those hypotheses.
BerReport score_ber(const cvec& eq_x, const cvec& eq_y,
                    const DualPolSymbols& ref, ModFormat fmt,
                    int n_polarizations);

// rms error-vector magnitude (fractional) against known symbols, excluding
// pilots, after removing the common phase.
double error_vector_magnitude(const cvec& eq, const cvec& ref_symbols,
                              const std::vector<std::size_t>& pilot_positions);

// Per-symbol wrapped phase error against known symbols after removing the
// common phase.
rvec phase_error_trace(const cvec& eq, const cvec& ref_symbols);

}  // namespace prx
