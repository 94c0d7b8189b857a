#include "prx/txgen.hpp"

#include <algorithm>
#include <cmath>

#include "prx/fft.hpp"
#include "prx/rng.hpp"

namespace prx {

ModFormat parse_mod_format(const std::string& name) {
  if (name == "qpsk") return ModFormat::qpsk;
  if (name == "qam16" || name == "16qam") return ModFormat::qam16;
  throw config_error("format: expected \"qpsk\" or \"qam16\", got \"" + name +
                     "\"");
}

std::string to_string(ModFormat fmt) {
  return fmt == ModFormat::qpsk ? "qpsk" : "qam16";
}

int bits_per_symbol(ModFormat fmt) { return fmt == ModFormat::qpsk ? 2 : 4; }

namespace {

// 2-bit Gray code to amplitude level, normalized later.
double gray2_level(unsigned b) {
  switch (b & 3u) {
    case 0u: return -3.0;
    case 1u: return -1.0;
    case 3u: return 1.0;
    default: return 3.0;  // 2u
  }
}

}  // namespace

cvec constellation(ModFormat fmt) {
  if (fmt == ModFormat::qpsk) {
    const double s = 1.0 / std::sqrt(2.0);
    // Bit pair (b0 b1) -> (I, Q), Gray: one bit per quadrature axis.
    return {cplx(s, s), cplx(s, -s), cplx(-s, s), cplx(-s, -s)};
  }
  cvec points(16);
  const double s = 1.0 / std::sqrt(10.0);
  for (unsigned idx = 0; idx < 16; ++idx) {
    const unsigned bi = (idx >> 2) & 3u;  // first two bits -> I
    const unsigned bq = idx & 3u;         // last two bits  -> Q
    points[idx] = cplx(gray2_level(bi) * s, gray2_level(bq) * s);
  }
  return points;
}

cvec map_bits(const std::vector<uint8_t>& bits, ModFormat fmt) {
  const int bps = bits_per_symbol(fmt);
  if (bits.size() % static_cast<std::size_t>(bps) != 0) {
    throw config_error("map_bits: bit count not a multiple of bits per symbol");
  }
  const cvec points = constellation(fmt);
  cvec out(bits.size() / static_cast<std::size_t>(bps));
  for (std::size_t s = 0; s < out.size(); ++s) {
    unsigned idx = 0;
    for (int b = 0; b < bps; ++b) {
      idx = (idx << 1) | (bits[s * static_cast<std::size_t>(bps) +
                               static_cast<std::size_t>(b)] & 1u);
    }
    out[s] = points[idx];
  }
  return out;
}

std::vector<uint8_t> demap_symbols(const cvec& symbols, ModFormat fmt) {
  const int bps = bits_per_symbol(fmt);
  const cvec points = constellation(fmt);
  std::vector<uint8_t> bits(symbols.size() * static_cast<std::size_t>(bps));
  for (std::size_t s = 0; s < symbols.size(); ++s) {
    std::size_t best = 0;
    double best_d = std::norm(symbols[s] - points[0]);
    for (std::size_t i = 1; i < points.size(); ++i) {
      const double d = std::norm(symbols[s] - points[i]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    for (int b = 0; b < bps; ++b) {
      bits[s * static_cast<std::size_t>(bps) + static_cast<std::size_t>(b)] =
          static_cast<uint8_t>((best >> (bps - 1 - b)) & 1u);
    }
  }
  return bits;
}

void validate(const TxConfig& cfg) {
  if (!(cfg.baud_rate_hz > 0.0)) {
    throw config_error("tx.baud_rate_hz: must be positive");
  }
  if (cfg.samples_per_symbol < 2) {
    throw config_error("tx.samples_per_symbol: must be at least 2");
  }
  if (!(cfg.rolloff >= 0.0 && cfg.rolloff <= 1.0)) {
    throw config_error("tx.rolloff: must lie in [0, 1]");
  }
  if (cfg.n_symbols < 2) {
    throw config_error("tx.n_symbols: must be at least 2");
  }
  if (!(cfg.pilot_fraction > 0.0 && cfg.pilot_fraction <= 0.5)) {
    throw config_error("tx.pilot_fraction: must lie in (0, 0.5]");
  }
  // The shaped band must fit inside the simulation Nyquist band.
  const double occupied = (1.0 + cfg.rolloff) * cfg.baud_rate_hz;
  const double fs = cfg.baud_rate_hz * cfg.samples_per_symbol;
  if (occupied > fs) {
    throw config_error(
        "tx: occupied bandwidth exceeds the simulation sample rate");
  }
}

PilotMask make_pilot_mask(std::size_t n_symbols, double pilot_fraction) {
  if (!(pilot_fraction > 0.0 && pilot_fraction <= 0.5)) {
    throw config_error("pilot_fraction: must lie in (0, 0.5]");
  }
  const std::size_t step =
      static_cast<std::size_t>(std::floor(1.0 / pilot_fraction));
  const std::size_t count = static_cast<std::size_t>(
      std::llround(pilot_fraction * static_cast<double>(n_symbols)));
  PilotMask mask;
  mask.frame_length = n_symbols;
  mask.positions.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t pos = k * step;
    if (pos >= n_symbols) break;
    mask.positions.push_back(pos);
  }
  return mask;
}

SymbolRecord generate_symbols(const TxConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  std::mt19937_64 rng(seed);
  const int bps = bits_per_symbol(cfg.format);
  SymbolRecord rec;
  rec.bits.resize(cfg.n_symbols * static_cast<std::size_t>(bps));
  for (auto& b : rec.bits) b = (uniform01(rng) < 0.5) ? 0 : 1;
  rec.symbols = map_bits(rec.bits, cfg.format);
  rec.pilots = make_pilot_mask(cfg.n_symbols, cfg.pilot_fraction);
  return rec;
}

DualPolSymbols generate_dual_pol(const TxConfig& cfg) {
  DualPolSymbols out;
  out.x = generate_symbols(cfg, cfg.seed);
  out.y = generate_symbols(cfg, cfg.seed + 0x9e3779b97f4a7c15ull);
  return out;
}

double raised_cosine_response(double freq_hz, double baud_rate_hz,
                              double rolloff) {
  const double af = std::abs(freq_hz);
  const double f1 = (1.0 - rolloff) * baud_rate_hz / 2.0;
  const double f2 = (1.0 + rolloff) * baud_rate_hz / 2.0;
  if (af <= f1) return 1.0;
  if (af >= f2 || rolloff == 0.0) return 0.0;
  return 0.5 * (1.0 + std::cos(kPi * (af - f1) / (rolloff * baud_rate_hz)));
}

ComplexFrame pulse_shape(const cvec& symbols, const TxConfig& cfg) {
  validate(cfg);
  if (symbols.empty()) throw config_error("pulse_shape: empty symbol stream");
  const std::size_t sps = static_cast<std::size_t>(cfg.samples_per_symbol);
  const std::size_t n = symbols.size() * sps;
  const double fs = cfg.baud_rate_hz * static_cast<double>(sps);

  cvec up(n, cplx(0.0, 0.0));
  for (std::size_t s = 0; s < symbols.size(); ++s) up[s * sps] = symbols[s];

  cvec spec = fft::forward(up);
  const rvec f = fft_freqs(n, fs);
  double h_sq_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double h = raised_cosine_response(f[k], cfg.baud_rate_hz, cfg.rolloff);
    spec[k] *= h;
    h_sq_sum += h * h;
  }
  // For i.i.d. unit-power symbols the zero-stuffed train has flat expected
  // spectral density, so E[mean |waveform|^2] = sum(H^2)/(n*sps) before
  // scaling; this gain makes that expectation exactly 1.
  const double gain =
      std::sqrt(static_cast<double>(n) * static_cast<double>(sps) / h_sq_sum);

  ComplexFrame out;
  out.sample_rate_hz = fs;
  out.samples = fft::inverse(spec);
  for (cplx& v : out.samples) v *= gain;
  return out;
}

double symbol_center_gain(const TxConfig& cfg) {
  validate(cfg);
  const std::size_t sps = static_cast<std::size_t>(cfg.samples_per_symbol);
  const std::size_t n = cfg.n_symbols * sps;
  const double fs = cfg.baud_rate_hz * static_cast<double>(sps);
  const rvec f = fft_freqs(n, fs);
  double h_sum = 0.0;
  double h_sq_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double h = raised_cosine_response(f[k], cfg.baud_rate_hz, cfg.rolloff);
    h_sum += h;
    h_sq_sum += h * h;
  }
  const double gain =
      std::sqrt(static_cast<double>(n) * static_cast<double>(sps) / h_sq_sum);
  // Impulse response at t = 0 is the mean of the frequency response.
  return gain * h_sum / static_cast<double>(n);
}

}  // namespace prx
