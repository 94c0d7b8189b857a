#pragma once

#include <cstdint>

#include "prx/channel.hpp"
#include "prx/frontend.hpp"
#include "prx/retrieval.hpp"
#include "prx/txgen.hpp"

namespace prx {

enum class JonesBootstrap {
  identity,      // assume no polarization rotation on the first pass
  intensity_fit  // least-squares fit of the rotation from pilot intensities
};

struct EqualizerConfig {
  int n_taps = 20;
  int n_outer_iterations = 5;
  double bulk_cd_ps_nm = 0.0;
  double regularization = 1e-3;
  JonesBootstrap bootstrap = JonesBootstrap::intensity_fit;
};

void validate(const EqualizerConfig& cfg);

// Symbol-spaced circular 2x2 FIR channel estimate. Tap m acts at relative
// delay m - center_tap.
struct ChannelEstimate {
  int n_taps = 0;
  int center_tap = 0;
  cvec hxx, hxy, hyx, hyy;
  double residual = 0.0;  // relative LS fit error on the training samples
};

ChannelEstimate identity_channel(int n_taps);

// Remove bulk chromatic dispersion (the static, known part of the link).
ComplexFrame compensate_cd(const ComplexFrame& in, double bulk_cd_ps_nm,
                           double center_wavelength_nm = 1550.0);

// Ridge-regularized least squares on known symbols at known_positions
// (record indices, symbol-spaced, circular). Requires at least 4 * n_taps
// training positions. Single-polarization streams may pass an all-zero y.
ChannelEstimate estimate_channel(const cvec& rx_x, const cvec& rx_y,
                                 const cvec& tx_x, const cvec& tx_y,
                                 const std::vector<std::size_t>& known_positions,
                                 const EqualizerConfig& cfg);

// Frequency-domain MMSE inversion of the estimated channel.
void equalize(const cvec& rx_x, const cvec& rx_y, const ChannelEstimate& est,
              double regularization, cvec& out_x, cvec& out_y);

// Fit and remove a linear phase ramp (offset + slope over sample index) from
// a field, referenced to known target values at known sample positions.
// Returns {offset, slope}.
std::pair<double, double> remove_linear_phase(
    cvec& field, const std::vector<std::size_t>& positions, const cvec& targets);

// Per-segment variant for stitched streams: the stream assembler fixes each
// save segment's phase only relative to its neighbour, so the stream carries
// an independent residual phase line per segment of length segment_len.
// Fits a record-wide line first (covering segments with too few anchors),
// then refits offset + slope inside each segment from the anchors it
// contains. segment_len == 0 or >= the record length degenerates to the
// record-wide fit.
void remove_linear_phase_segmented(cvec& field,
                                   const std::vector<std::size_t>& positions,
                                   const cvec& targets,
                                   std::size_t segment_len);

// Predicted receive-plane waveforms for both polarizations: push the symbol
// streams through the current channel estimate, pulse-shape at the DSP rate,
// and re-apply the bulk link dispersion. Used to refresh pilot targets
// between decoding passes.
std::pair<ComplexFrame, ComplexFrame> predict_received_waveforms(
    const DualPolSymbols& tx, const ChannelEstimate& est, const TxConfig& shape_cfg,
    double bulk_cd_ps_nm, double center_wavelength_nm);

// Closed-form polarization-rotation bootstrap from pilot intensities: the
// direct photocurrent at a pilot instant is a quadratic form in the two
// known per-polarization reference waveforms, linear in the row's Gram
// parameters, so each row is recovered by real least squares up to a phase.
// The dispersed-branch photocurrents obey the same linear model against the
// element-dispersed references and are stacked into the fit: without them a
// constant-modulus format sampled at zero-ISI symbol centers leaves the two
// power columns collinear and the modulus split unidentifiable.
Jones bootstrap_jones_from_intensity(
    const IntensityQuad& quad,
    const std::vector<std::size_t>& pilot_samples, const ComplexFrame& ref_x,
    const ComplexFrame& ref_y, const DispersionSpec& element);

struct OuterLoopDiagnostics {
  rvec pre_fec_ber;                 // per outer iteration (data-aided)
  rvec ls_residual;                 // per outer iteration
  rvec retrieval_converged_fraction;  // per outer iteration, mean of pols
  rvec block_final_db_x;            // last iteration
  rvec block_final_db_y;
  rvec trace_mean_db_x;             // last iteration
  rvec trace_mean_db_y;
};

struct OuterLoopResult {
  cvec eq_x, eq_y;            // equalized symbol streams
  cvec retrieved_x, retrieved_y;  // final retrieved DSP-rate fields
  ChannelEstimate estimate;
  OuterLoopDiagnostics diag;
};

// Joint retrieval + equalization: per pass, retrieve both polarization
// fields from their intensity pairs with pilot constraints predicted from
// the current channel estimate, align phase, undo bulk dispersion, estimate
// the 2x2 channel on the full known symbol record, and refresh the pilots.
// n_polarizations = 1 runs the x path only with an identity rotation.
OuterLoopResult outer_loop(const IntensityQuad& quad, const DualPolSymbols& tx,
                           const TxConfig& tx_cfg,
                           const DispersionSpec& element, const GsConfig& gs,
                           const EqualizerConfig& eq, int n_polarizations);

}  // namespace prx
