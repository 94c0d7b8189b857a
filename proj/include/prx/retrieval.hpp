#pragma once

#include <cstdint>
#include <random>

#include "prx/sigkit.hpp"

namespace prx {

// Iterative two-plane phase retrieval on intensity pairs (direct intensity a,
// intensity b behind a known dispersive element), with a spectral-support
// constraint, optional known-sample (pilot) blending, periodic stagnation
// escape, and a reflection-relaxed update that avoids the fixed points of
// plain alternating projections far from the solution.
struct GsConfig {
  int max_iterations = 500;
  // Convergence threshold on the mean quartic intensity error, and the
  // per-sample threshold used by the stagnation escape. Linear units on
  // power-normalized intensities; 1e-4 corresponds to -40 dB.
  double epsilon = 1e-4;
  int restart_period = 100;
  int block_length = 256;
  double save_fraction = 0.5;
  SpectralSupport spectral_support{-16.5e9, 16.5e9};
  std::uint64_t seed = 0;
  // 0 = plain alternating projections; (0, 1] = relaxed reflections with the
  // given weight. 0.9 is a robust default: random starts that stagnate near
  // -15 dB under plain projections reach the -40 dB regime with it.
  double relaxation = 0.9;
  // Samples at each end of a block excluded from the dispersed-intensity
  // amplitude replacement. On a block sliced out of a longer record the
  // dispersed intensity near the edges depends on fields outside the block,
  // so enforcing it there poisons the iteration.
  int edge_guard = 8;
  // Blend weight for pilot samples in [0, 1]; 0 disables the pilot
  // constraint entirely (the fields are still phase-referenced to the
  // predicted pilots afterwards, but the iteration runs unanchored).
  double pilot_weight = 0.5;
};

void validate(const GsConfig& cfg, double sample_rate_hz);

// Known complex field samples inside one block, local sample indices.
struct PilotConstraint {
  std::vector<std::size_t> positions;
  cvec targets;
  double weight = 0.5;
};

struct GsState {
  cvec s;
  int iteration = 0;
  rvec a_err_trace_db;  // mean (a - |s|^2)^2 per iteration, dB
  double sample_rate_hz = 0.0;
};

GsState make_initial_state(const rvec& a, double sample_rate_hz,
                           std::uint64_t seed);

// One plain alternating-projection pass: measured-amplitude replacement with
// pilot blending, then the dispersed-plane amplitude replacement carried back
// through the element and the spectral-support projection. Appends the
// resulting full-block mean A_err (dB) to the trace.
GsState gs_iterate(GsState state, const rvec& a, const rvec& b,
                   const DispersionSpec& element, const GsConfig& cfg,
                   const PilotConstraint* pilots = nullptr);

// Re-randomize the phase of every sample whose intensity error
// (a - |s|^2)^2 exceeds epsilon. Near stagnation this rescrambles most of the
// block; at convergence it touches nothing.
GsState stagnation_escape(GsState state, const rvec& a, double epsilon,
                          std::mt19937_64& rng);

struct BlockOptions {
  const PilotConstraint* pilots = nullptr;
  const cvec* warm_start = nullptr;  // initial field, block length
  std::size_t save_lo = 0;           // metric window [save_lo, save_hi)
  std::size_t save_hi = 0;           // 0 means the full block
};

struct BlockResult {
  cvec field;
  rvec trace_db;
  double final_db = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Full retrieval of one block: power normalization, seeded random-phase or
// warm start, relaxed iteration with periodic stagnation escape, and
// keep-best tracking of the projected estimate over the metric window.
// Reported A_err is on power-normalized intensities (scale-invariant).
BlockResult retrieve_block(const rvec& a, const rvec& b, double sample_rate_hz,
                           const DispersionSpec& element, const GsConfig& cfg,
                           const BlockOptions& opts = {});

// Known samples across a whole record, record sample indices.
struct StreamPilots {
  std::vector<std::size_t> positions;
  cvec targets;
  double weight = 0.5;
};

struct StreamResult {
  cvec field;
  rvec block_final_db;
  std::vector<int> block_iterations;
  // Mean over blocks of the per-iteration trace (blocks that stopped early
  // hold their final value), for convergence reporting.
  rvec trace_mean_db;
  double converged_fraction = 0.0;
};

// Overlap-save retrieval of a long circular record: blocks of block_length
// advance by round(block_length * save_fraction) samples; each keeps only its
// centered save region. Consecutive blocks warm-start from the previous
// estimate and are phase-stitched over the shared overlap, so the record
// carries one coherent phase. An optional init field (full record length)
// warm-starts every block, e.g. from a previous decoding pass.
StreamResult retrieve_stream(const rvec& a, const rvec& b,
                             double sample_rate_hz,
                             const DispersionSpec& element, const GsConfig& cfg,
                             const StreamPilots& pilots,
                             const cvec* init = nullptr);

}  // namespace prx
