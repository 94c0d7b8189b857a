#include "prx/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "prx/rng.hpp"

namespace prx {

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double osnr_to_snr(double osnr_db, double baud_rate_hz, int n_polarizations) {
  if (!(baud_rate_hz > 0.0)) {
    throw config_error("osnr_to_snr: baud rate must be positive");
  }
  if (n_polarizations != 1 && n_polarizations != 2) {
    throw config_error("osnr_to_snr: n_polarizations must be 1 or 2");
  }
  const double osnr_lin = undb10(osnr_db);
  return osnr_lin * 2.0 * kOsnrRefBandwidthHz /
         (static_cast<double>(n_polarizations) * baud_rate_hz);
}

double qpsk_theory_ber(double osnr_db, double baud_rate_hz,
                       int n_polarizations) {
  const double snr = osnr_to_snr(osnr_db, baud_rate_hz, n_polarizations);
  return q_function(std::sqrt(snr));
}

double theory_ber(ModFormat fmt, double osnr_db, double baud_rate_hz,
                  int n_polarizations) {
  const double snr = osnr_to_snr(osnr_db, baud_rate_hz, n_polarizations);
  if (fmt == ModFormat::qpsk) return q_function(std::sqrt(snr));
  // Gray-mapped square 16-point constellation, nearest-neighbour term.
  return 0.375 * std::erfc(std::sqrt(snr / 10.0));
}

double mc_qpsk_ber(double osnr_db, double baud_rate_hz, int n_polarizations,
                   std::size_t n_symbols, std::uint64_t seed) {
  if (n_symbols == 0) throw config_error("mc_qpsk_ber: n_symbols must be > 0");
  const double snr = osnr_to_snr(osnr_db, baud_rate_hz, n_polarizations);
  const double sigma = std::sqrt(1.0 / snr);  // E|noise|^2 = N0/Es
  std::mt19937_64 rng(seed);
  const double s = 1.0 / std::sqrt(2.0);
  std::size_t errors = 0;
  for (std::size_t i = 0; i < n_symbols; ++i) {
    const double bi = uniform01(rng) < 0.5 ? s : -s;
    const double bq = uniform01(rng) < 0.5 ? s : -s;
    const cplx r = cplx(bi, bq) + sigma * gaussian_cplx(rng);
    if ((r.real() > 0.0) != (bi > 0.0)) ++errors;
    if ((r.imag() > 0.0) != (bq > 0.0)) ++errors;
  }
  return static_cast<double>(errors) / (2.0 * static_cast<double>(n_symbols));
}

namespace {

std::size_t count_bit_errors(const cvec& eq, const std::vector<uint8_t>& ref_bits,
                             ModFormat fmt,
                             const std::vector<std::size_t>& skip_sorted) {
  const std::vector<uint8_t> bits = demap_symbols(eq, fmt);
  const std::size_t bps = static_cast<std::size_t>(bits_per_symbol(fmt));
  std::size_t errors = 0;
  std::size_t skip_idx = 0;
  const std::size_t n_sym = eq.size();
  for (std::size_t s = 0; s < n_sym; ++s) {
    while (skip_idx < skip_sorted.size() && skip_sorted[skip_idx] < s) {
      ++skip_idx;
    }
    if (skip_idx < skip_sorted.size() && skip_sorted[skip_idx] == s) continue;
    for (std::size_t b = 0; b < bps; ++b) {
      errors += bits[s * bps + b] != ref_bits[s * bps + b];
    }
  }
  return errors;
}

cvec rotate_quarter(const cvec& x, int quarter) {
  static const cplx rots[4] = {cplx(1, 0), cplx(0, 1), cplx(-1, 0), cplx(0, -1)};
  cvec out(x.size());
  const cplx r = rots[quarter & 3];
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * r;
  return out;
}

struct PolScore {
  std::size_t errors = 0;
  int rotation = 0;
};

PolScore best_rotation(const cvec& eq, const std::vector<uint8_t>& ref_bits,
                       ModFormat fmt,
                       const std::vector<std::size_t>& skip_sorted) {
  PolScore best;
  best.errors = static_cast<std::size_t>(-1);
  for (int q = 0; q < 4; ++q) {
    const std::size_t e =
        count_bit_errors(rotate_quarter(eq, q), ref_bits, fmt, skip_sorted);
    if (e < best.errors) {
      best.errors = e;
      best.rotation = q;
    }
  }
  return best;
}

}  // namespace

BerReport score_ber(const cvec& eq_x, const cvec& eq_y,
                    const DualPolSymbols& ref, ModFormat fmt,
                    int n_polarizations) {
  if (n_polarizations != 1 && n_polarizations != 2) {
    throw config_error("score_ber: n_polarizations must be 1 or 2");
  }
  const std::size_t n_sym = ref.x.symbols.size();
  if (eq_x.size() != n_sym) {
    throw config_error("score_ber: stream length does not match the record");
  }
  std::vector<std::size_t> skip = ref.x.pilots.positions;
  std::sort(skip.begin(), skip.end());
  const std::size_t bps = static_cast<std::size_t>(bits_per_symbol(fmt));
  const std::size_t data_syms = n_sym - skip.size();

  BerReport rep;
  if (n_polarizations == 1) {
    const PolScore sx = best_rotation(eq_x, ref.x.bits, fmt, skip);
    rep.bit_errors = sx.errors;
    rep.bit_count = data_syms * bps;
    rep.rotation_x = sx.rotation;
    rep.ber = static_cast<double>(rep.bit_errors) /
              static_cast<double>(rep.bit_count);
    rep.ber_x = rep.ber;
    return rep;
  }

  if (eq_y.size() != n_sym) {
    throw config_error("score_ber: stream length does not match the record");
  }
  const PolScore direct_x = best_rotation(eq_x, ref.x.bits, fmt, skip);
  const PolScore direct_y = best_rotation(eq_y, ref.y.bits, fmt, skip);
  const PolScore crossed_x = best_rotation(eq_y, ref.x.bits, fmt, skip);
  const PolScore crossed_y = best_rotation(eq_x, ref.y.bits, fmt, skip);
  const std::size_t direct = direct_x.errors + direct_y.errors;
  const std::size_t crossed = crossed_x.errors + crossed_y.errors;
  rep.swapped = crossed < direct;
  const PolScore& sx = rep.swapped ? crossed_x : direct_x;
  const PolScore& sy = rep.swapped ? crossed_y : direct_y;
  rep.bit_errors = sx.errors + sy.errors;
  rep.bit_count = 2 * data_syms * bps;
  rep.rotation_x = sx.rotation;
  rep.rotation_y = sy.rotation;
  rep.ber = static_cast<double>(rep.bit_errors) /
            static_cast<double>(rep.bit_count);
  rep.ber_x = static_cast<double>(sx.errors) /
              static_cast<double>(data_syms * bps);
  rep.ber_y = static_cast<double>(sy.errors) /
              static_cast<double>(data_syms * bps);
  return rep;
}

namespace {

cplx common_phase(const cvec& eq, const cvec& ref) {
  cplx acc(0.0, 0.0);
  for (std::size_t i = 0; i < eq.size(); ++i) acc += eq[i] * std::conj(ref[i]);
  const double m = std::abs(acc);
  return m > 0.0 ? std::conj(acc / m) : cplx(1.0, 0.0);
}

}  // namespace

double error_vector_magnitude(const cvec& eq, const cvec& ref_symbols,
                              const std::vector<std::size_t>& pilot_positions) {
  if (eq.size() != ref_symbols.size() || eq.empty()) {
    throw config_error("error_vector_magnitude: length mismatch");
  }
  std::vector<char> is_pilot(eq.size(), 0);
  for (std::size_t p : pilot_positions) {
    if (p < eq.size()) is_pilot[p] = 1;
  }
  const cplx rot = common_phase(eq, ref_symbols);
  double err = 0.0;
  double refp = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < eq.size(); ++i) {
    if (is_pilot[i]) continue;
    err += std::norm(eq[i] * rot - ref_symbols[i]);
    refp += std::norm(ref_symbols[i]);
    ++count;
  }
  if (count == 0 || refp == 0.0) {
    throw config_error("error_vector_magnitude: no data symbols");
  }
  return std::sqrt(err / refp);
}

rvec phase_error_trace(const cvec& eq, const cvec& ref_symbols) {
  if (eq.size() != ref_symbols.size() || eq.empty()) {
    throw config_error("phase_error_trace: length mismatch");
  }
  const cplx rot = common_phase(eq, ref_symbols);
  rvec trace(eq.size());
  for (std::size_t i = 0; i < eq.size(); ++i) {
    trace[i] = std::arg(eq[i] * rot * std::conj(ref_symbols[i]));
  }
  return trace;
}

}  // namespace prx
