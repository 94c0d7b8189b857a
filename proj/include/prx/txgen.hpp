#pragma once

#include <cstdint>

#include "prx/sigkit.hpp"

namespace prx {

enum class ModFormat { qpsk, qam16 };

ModFormat parse_mod_format(const std::string& name);
std::string to_string(ModFormat fmt);
int bits_per_symbol(ModFormat fmt);

// Gray-mapped unit-average-power constellation points, indexed by the
// integer whose bits are the symbol's bit group (MSB first).
cvec constellation(ModFormat fmt);

// Map a bit stream (bits_per_symbol * n entries) to symbols / back.
cvec map_bits(const std::vector<uint8_t>& bits, ModFormat fmt);
std::vector<uint8_t> demap_symbols(const cvec& symbols, ModFormat fmt);

struct TxConfig {
  double baud_rate_hz = 30e9;
  int samples_per_symbol = 4;
  double rolloff = 0.1;
  std::size_t n_symbols = 16384;
  double pilot_fraction = 0.1;
  ModFormat format = ModFormat::qpsk;
  std::uint64_t seed = 1;
};

void validate(const TxConfig& cfg);

// Pilot symbols sit on a regular grid: floor(1/pilot_fraction) spacing,
// round(pilot_fraction * n_symbols) of them starting at index 0.
struct PilotMask {
  std::vector<std::size_t> positions;
  std::size_t frame_length = 0;
};

PilotMask make_pilot_mask(std::size_t n_symbols, double pilot_fraction);

// One polarization's symbol record. Pilots are ordinary data-bearing symbols
// whose values the receiver is allowed to know.
struct SymbolRecord {
  cvec symbols;
  std::vector<uint8_t> bits;
  PilotMask pilots;
};

SymbolRecord generate_symbols(const TxConfig& cfg, std::uint64_t seed);

// Both polarizations share the pilot grid but carry independent data.
struct DualPolSymbols {
  SymbolRecord x;
  SymbolRecord y;
};

DualPolSymbols generate_dual_pol(const TxConfig& cfg);

// Raised-cosine spectrum evaluated at |f|, unit passband gain.
double raised_cosine_response(double freq_hz, double baud_rate_hz, double rolloff);

// Frequency-domain Nyquist shaping of a zero-stuffed symbol train on a
// circular frame of n_symbols * samples_per_symbol samples. The output gain
// is fixed analytically so that the ensemble-average waveform power is 1 for
// unit-power symbols; it does not depend on the particular symbol draw, so
// scaled symbol streams shape to proportionally scaled waveforms.
ComplexFrame pulse_shape(const cvec& symbols, const TxConfig& cfg);

// Net gain a single symbol sees at its own sample instant under pulse_shape
// (shaping gain times the DC-normalized filter response at t = 0).
double symbol_center_gain(const TxConfig& cfg);

}  // namespace prx
