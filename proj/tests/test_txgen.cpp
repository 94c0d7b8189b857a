#include <doctest.h>

#include <prx/fft.hpp>
#include <prx/txgen.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "test_util.hpp"

using namespace prx;
using testutil::max_abs_diff;
using testutil::rel_rms_diff;

namespace {

int hamming(int a, int b, int width) {
  int d = 0;
  for (int i = 0; i < width; ++i) {
    if (((a >> i) & 1) != ((b >> i) & 1)) ++d;
  }
  return d;
}

double constellation_mean_power(const cvec& pts) {
  double p = 0.0;
  for (const auto& v : pts) p += std::norm(v);
  return p / static_cast<double>(pts.size());
}

// Two-sided bandwidth containing the requested energy fraction: accumulate
// FFT-bin energies in order of increasing |f|.
double occupied_bandwidth(const ComplexFrame& frame, double fraction) {
  const cvec spec = fft::forward(frame.samples);
  const rvec f = fft_freqs(frame.samples.size(), frame.sample_rate_hz);
  std::vector<std::size_t> order(spec.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(f[a]) < std::abs(f[b]); });
  double total = 0.0;
  for (const auto& v : spec) total += std::norm(v);
  double acc = 0.0;
  for (const std::size_t k : order) {
    acc += std::norm(spec[k]);
    if (acc >= fraction * total) return 2.0 * std::abs(f[k]);
  }
  return frame.sample_rate_hz;
}

double energy_beyond(const ComplexFrame& frame, double edge_hz) {
  const cvec spec = fft::forward(frame.samples);
  const rvec f = fft_freqs(frame.samples.size(), frame.sample_rate_hz);
  double out = 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    total += std::norm(spec[k]);
    if (std::abs(f[k]) > edge_hz) out += std::norm(spec[k]);
  }
  return total > 0.0 ? out / total : 0.0;
}

TxConfig small_config() {
  TxConfig cfg;
  cfg.baud_rate_hz = 30e9;
  cfg.samples_per_symbol = 2;
  cfg.rolloff = 0.1;
  cfg.n_symbols = 4096;
  cfg.pilot_fraction = 0.1;
  cfg.format = ModFormat::qpsk;
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("constellations have unit average power") {
  for (const ModFormat fmt : {ModFormat::qpsk, ModFormat::qam16}) {
    const cvec pts = constellation(fmt);
    REQUIRE(static_cast<int>(pts.size()) == (1 << bits_per_symbol(fmt)));
    CHECK(constellation_mean_power(pts) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("nearest neighbours in the constellation differ by one bit") {
  for (const ModFormat fmt : {ModFormat::qpsk, ModFormat::qam16}) {
    const cvec pts = constellation(fmt);
    const int width = bits_per_symbol(fmt);
    double min_dist = 1e9;
    for (std::size_t a = 0; a < pts.size(); ++a) {
      for (std::size_t b = a + 1; b < pts.size(); ++b) {
        min_dist = std::min(min_dist, std::abs(pts[a] - pts[b]));
      }
    }
    for (std::size_t a = 0; a < pts.size(); ++a) {
      for (std::size_t b = 0; b < pts.size(); ++b) {
        if (a == b) continue;
        if (std::abs(pts[a] - pts[b]) < 1.1 * min_dist) {
          CHECK(hamming(static_cast<int>(a), static_cast<int>(b), width) == 1);
        }
      }
    }
  }
}

TEST_CASE("bit mapping and symbol demapping are inverse") {
  for (const ModFormat fmt : {ModFormat::qpsk, ModFormat::qam16}) {
    const int width = bits_per_symbol(fmt);
    const int m = 1 << width;
    std::vector<uint8_t> bits;
    for (int idx = 0; idx < m; ++idx) {
      for (int b = width - 1; b >= 0; --b) bits.push_back(static_cast<uint8_t>((idx >> b) & 1));
    }
    const cvec syms = map_bits(bits, fmt);
    REQUIRE(syms.size() == static_cast<std::size_t>(m));
    const cvec pts = constellation(fmt);
    for (int idx = 0; idx < m; ++idx) CHECK(syms[idx] == pts[idx]);
    const std::vector<uint8_t> back = demap_symbols(syms, fmt);
    REQUIRE(back.size() == bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) CHECK(back[i] == bits[i]);
  }
}

TEST_CASE("demapping picks the nearest constellation point under noise") {
  const cvec pts = constellation(ModFormat::qam16);
  cvec noisy = pts;
  for (auto& v : noisy) v += cplx(0.05, -0.04);
  const std::vector<uint8_t> bits = demap_symbols(noisy, ModFormat::qam16);
  const std::vector<uint8_t> clean = demap_symbols(pts, ModFormat::qam16);
  REQUIRE(bits.size() == clean.size());
  for (std::size_t i = 0; i < bits.size(); ++i) CHECK(bits[i] == clean[i]);
}

TEST_CASE("pilot grid has the specified density and spacing") {
  SUBCASE("ten percent of 16384 symbols") {
    const PilotMask mask = make_pilot_mask(16384, 0.1);
    CHECK(mask.positions.size() == 1638);
    CHECK(mask.frame_length == 16384);
    for (std::size_t k = 0; k < mask.positions.size(); ++k) {
      CHECK(mask.positions[k] == 10 * k);
    }
  }
  SUBCASE("twenty percent of 16384 symbols") {
    const PilotMask mask = make_pilot_mask(16384, 0.2);
    CHECK(mask.positions.size() == 3277);
    CHECK(mask.positions.back() == 16380);
  }
  SUBCASE("half the symbols") {
    const PilotMask mask = make_pilot_mask(8192, 0.5);
    CHECK(mask.positions.size() == 4096);
    for (std::size_t k = 0; k < mask.positions.size(); ++k) {
      CHECK(mask.positions[k] == 2 * k);
    }
  }
  SUBCASE("fraction outside the supported range") {
    CHECK_THROWS_AS(make_pilot_mask(1024, 0.0), config_error);
    CHECK_THROWS_AS(make_pilot_mask(1024, 0.6), config_error);
  }
}

TEST_CASE("symbol generation is deterministic and bit consistent") {
  const TxConfig cfg = small_config();
  const SymbolRecord a = generate_symbols(cfg, 99);
  const SymbolRecord b = generate_symbols(cfg, 99);
  const SymbolRecord c = generate_symbols(cfg, 100);
  REQUIRE(a.symbols.size() == cfg.n_symbols);
  CHECK(max_abs_diff(a.symbols, b.symbols) == 0.0);
  CHECK(max_abs_diff(a.symbols, c.symbols) > 0.0);

  const cvec remapped = map_bits(a.bits, cfg.format);
  CHECK(max_abs_diff(a.symbols, remapped) == 0.0);
}

TEST_CASE("dual polarization streams share the pilot grid but not the data") {
  const TxConfig cfg = small_config();
  const DualPolSymbols tx = generate_dual_pol(cfg);
  REQUIRE(tx.x.pilots.positions.size() == tx.y.pilots.positions.size());
  for (std::size_t k = 0; k < tx.x.pilots.positions.size(); ++k) {
    CHECK(tx.x.pilots.positions[k] == tx.y.pilots.positions[k]);
  }
  CHECK(max_abs_diff(tx.x.symbols, tx.y.symbols) > 0.1);
}

TEST_CASE("pulse shaping confines the spectrum to the nyquist band") {
  TxConfig cfg = small_config();
  cfg.n_symbols = 8192;
  const SymbolRecord rec = generate_symbols(cfg, 5);
  const ComplexFrame w = pulse_shape(rec.symbols, cfg);
  REQUIRE(w.samples.size() == cfg.n_symbols * 2);
  CHECK(w.sample_rate_hz == doctest::Approx(60e9));

  // Band edge at (1+rolloff)*baud/2 = 16.5 GHz; nothing survives beyond it.
  CHECK(energy_beyond(w, 16.5e9 + 1.0) < 1e-24);

  const double bw999 = occupied_bandwidth(w, 0.999);
  CHECK(bw999 > 30.0e9);
  CHECK(bw999 < 32.0e9);
}

TEST_CASE("pulse shaping has unit average power across seeds") {
  TxConfig cfg = small_config();
  cfg.n_symbols = 8192;
  double acc = 0.0;
  const std::vector<std::uint64_t> seeds = {2, 3, 4};
  for (const std::uint64_t s : seeds) {
    const SymbolRecord rec = generate_symbols(cfg, s);
    const ComplexFrame w = pulse_shape(rec.symbols, cfg);
    const double p = mean_power(w.samples);
    CHECK(p == doctest::Approx(1.0).epsilon(0.05));
    acc += p;
  }
  CHECK(acc / static_cast<double>(seeds.size()) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("pulse shaping is linear in the symbol stream") {
  const TxConfig cfg = small_config();
  const SymbolRecord rec = generate_symbols(cfg, 21);
  cvec doubled = rec.symbols;
  for (auto& v : doubled) v *= cplx(2.0, 0.0);
  const ComplexFrame w1 = pulse_shape(rec.symbols, cfg);
  const ComplexFrame w2 = pulse_shape(doubled, cfg);
  cvec w1x2 = w1.samples;
  for (auto& v : w1x2) v *= 2.0;
  CHECK(rel_rms_diff(w2.samples, w1x2) < 1e-13);
}

TEST_CASE("raised cosine shaping is free of intersymbol interference") {
  const TxConfig cfg = small_config();
  const SymbolRecord rec = generate_symbols(cfg, 33);
  const ComplexFrame w = pulse_shape(rec.symbols, cfg);
  const double g = symbol_center_gain(cfg);
  CHECK(g > 0.0);
  const std::size_t sps = static_cast<std::size_t>(cfg.samples_per_symbol);
  double worst = 0.0;
  for (std::size_t s = 0; s < rec.symbols.size(); ++s) {
    worst = std::max(worst, std::abs(w.samples[s * sps] - g * rec.symbols[s]));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("transmitter configuration validation") {
  TxConfig cfg = small_config();
  CHECK_NOTHROW(validate(cfg));
  cfg.samples_per_symbol = 1;
  CHECK_THROWS_AS(validate(cfg), config_error);
  cfg = small_config();
  cfg.rolloff = 1.5;
  CHECK_THROWS_AS(validate(cfg), config_error);
  cfg = small_config();
  cfg.pilot_fraction = 0.0;
  CHECK_THROWS_AS(validate(cfg), config_error);
  cfg = small_config();
  cfg.n_symbols = 0;
  CHECK_THROWS_AS(validate(cfg), config_error);
}

TEST_CASE("format names parse and print consistently") {
  CHECK(parse_mod_format("qpsk") == ModFormat::qpsk);
  CHECK(parse_mod_format("qam16") == ModFormat::qam16);
  CHECK(to_string(ModFormat::qpsk) == "qpsk");
  CHECK(to_string(ModFormat::qam16) == "qam16");
  CHECK(bits_per_symbol(ModFormat::qpsk) == 2);
  CHECK(bits_per_symbol(ModFormat::qam16) == 4);
  CHECK_THROWS_AS(parse_mod_format("8psk"), config_error);
}
