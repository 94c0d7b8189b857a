#include <doctest.h>

#include <prx/equalizer.hpp>
#include <prx/frontend.hpp>

#include <cmath>
#include <numeric>
#include <random>

#include "test_util.hpp"

using namespace prx;
using testutil::max_abs_diff;
using testutil::random_field;
using testutil::rel_rms_diff;

namespace {

// Independent circular 2x2 FIR application in the time domain, used as the
// reference the estimator has to recover.
struct FirChannel {
  int n_taps = 0;
  int center = 0;
  cvec hxx, hxy, hyx, hyy;
};

std::pair<cvec, cvec> apply_fir(const FirChannel& ch, const cvec& tx_x,
                                const cvec& tx_y) {
  const std::size_t n = tx_x.size();
  cvec rx(n, cplx(0.0, 0.0)), ry(n, cplx(0.0, 0.0));
  for (std::size_t k = 0; k < n; ++k) {
    for (int m = 0; m < ch.n_taps; ++m) {
      const long d = m - ch.center;
      const std::size_t src =
          static_cast<std::size_t>(((static_cast<long>(k) - d) % static_cast<long>(n) +
                                    static_cast<long>(n)) % static_cast<long>(n));
      rx[k] += ch.hxx[m] * tx_x[src] + ch.hxy[m] * tx_y[src];
      ry[k] += ch.hyx[m] * tx_x[src] + ch.hyy[m] * tx_y[src];
    }
  }
  return {rx, ry};
}

FirChannel make_test_channel() {
  FirChannel ch;
  ch.n_taps = 5;
  ch.center = 2;
  ch.hxx = {cplx(0.02, -0.01), cplx(-0.10, 0.05), cplx(0.95, 0.20),
            cplx(0.08, -0.03), cplx(-0.01, 0.02)};
  ch.hxy = {cplx(0.01, 0.00), cplx(0.04, -0.02), cplx(0.30, -0.10),
            cplx(-0.05, 0.01), cplx(0.02, 0.01)};
  ch.hyx = {cplx(-0.02, 0.01), cplx(0.06, 0.03), cplx(-0.25, 0.15),
            cplx(0.03, -0.04), cplx(0.01, 0.00)};
  ch.hyy = {cplx(0.01, 0.02), cplx(-0.07, -0.04), cplx(0.90, -0.25),
            cplx(0.06, 0.05), cplx(-0.02, -0.01)};
  return ch;
}

cvec qpsk_stream(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  cvec out(n);
  const double s = 1.0 / std::sqrt(2.0);
  for (auto& v : out) {
    v = cplx(gen() & 1 ? s : -s, gen() & 2 ? s : -s);
  }
  return out;
}

std::vector<std::size_t> all_positions(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  return p;
}

double tap_error(const cvec& est, const cvec& truth) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    num += std::norm(est[i] - truth[i]);
    den += std::norm(truth[i]);
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("cd compensation inverts the link dispersion") {
  ComplexFrame frame;
  frame.samples = random_field(2048, 4);
  frame.sample_rate_hz = 60e9;
  const DispersionSpec cd{8921.0, 1550.0};
  const ComplexFrame dispersed = apply_dispersion(frame, cd);
  const ComplexFrame restored = compensate_cd(dispersed, 8921.0, 1550.0);
  CHECK(rel_rms_diff(restored.samples, frame.samples) < 1e-12);
}

TEST_CASE("the identity channel estimate is a passthrough under equalization") {
  const cvec tx_x = qpsk_stream(512, 1);
  const cvec tx_y = qpsk_stream(512, 2);
  const ChannelEstimate est = identity_channel(7);
  cvec out_x, out_y;
  // The MMSE inverse scales each bin by 1/(1 + lambda) for a unit channel,
  // so a vanishing regularizer keeps the passthrough error at rounding level.
  equalize(tx_x, tx_y, est, 1e-15, out_x, out_y);
  CHECK(rel_rms_diff(out_x, tx_x) < 1e-12);
  CHECK(rel_rms_diff(out_y, tx_y) < 1e-12);
  CHECK_THROWS_AS(equalize(tx_x, tx_y, est, 0.0, out_x, out_y), config_error);
}

TEST_CASE("the channel estimator recovers a synthetic mixing channel") {
  const std::size_t n = 2048;
  const cvec tx_x = qpsk_stream(n, 10);
  const cvec tx_y = qpsk_stream(n, 11);
  const FirChannel ch = make_test_channel();
  auto [rx_x, rx_y] = apply_fir(ch, tx_x, tx_y);

  EqualizerConfig cfg;
  cfg.n_taps = 5;
  cfg.regularization = 1e-6;
  const ChannelEstimate est =
      estimate_channel(rx_x, rx_y, tx_x, tx_y, all_positions(n), cfg);

  REQUIRE(est.n_taps == 5);
  CHECK(est.center_tap == ch.center);
  CHECK(tap_error(est.hxx, ch.hxx) < 0.02);
  CHECK(tap_error(est.hxy, ch.hxy) < 0.02);
  CHECK(tap_error(est.hyx, ch.hyx) < 0.02);
  CHECK(tap_error(est.hyy, ch.hyy) < 0.02);
  CHECK(est.residual < 1e-3);
}

TEST_CASE("estimation tolerates additive noise gracefully") {
  const std::size_t n = 4096;
  const cvec tx_x = qpsk_stream(n, 20);
  const cvec tx_y = qpsk_stream(n, 21);
  const FirChannel ch = make_test_channel();
  auto [rx_x, rx_y] = apply_fir(ch, tx_x, tx_y);
  std::mt19937_64 gen(99);
  std::normal_distribution<double> nd(0.0, 0.02);
  for (std::size_t i = 0; i < n; ++i) {
    rx_x[i] += cplx(nd(gen), nd(gen));
    rx_y[i] += cplx(nd(gen), nd(gen));
  }
  EqualizerConfig cfg;
  cfg.n_taps = 5;
  const ChannelEstimate est =
      estimate_channel(rx_x, rx_y, tx_x, tx_y, all_positions(n), cfg);
  CHECK(tap_error(est.hxx, ch.hxx) < 0.05);
  CHECK(tap_error(est.hyy, ch.hyy) < 0.05);
  // Residual reflects the injected noise level (|noise|^2 / |signal|^2).
  CHECK(est.residual < 0.1);
}

TEST_CASE("estimation requires enough training symbols") {
  const std::size_t n = 64;
  const cvec tx_x = qpsk_stream(n, 1);
  const cvec tx_y = qpsk_stream(n, 2);
  EqualizerConfig cfg;
  cfg.n_taps = 20;  // needs >= 80 training positions
  CHECK_THROWS_AS(
      estimate_channel(tx_x, tx_y, tx_x, tx_y, all_positions(n), cfg),
      config_error);
}

TEST_CASE("equalization inverts the estimated channel") {
  const std::size_t n = 2048;
  const cvec tx_x = qpsk_stream(n, 30);
  const cvec tx_y = qpsk_stream(n, 31);
  const FirChannel ch = make_test_channel();
  auto [rx_x, rx_y] = apply_fir(ch, tx_x, tx_y);

  EqualizerConfig cfg;
  cfg.n_taps = 5;
  cfg.regularization = 1e-6;
  const ChannelEstimate est =
      estimate_channel(rx_x, rx_y, tx_x, tx_y, all_positions(n), cfg);
  cvec out_x, out_y;
  equalize(rx_x, rx_y, est, 1e-6, out_x, out_y);
  CHECK(rel_rms_diff(out_x, tx_x) < 0.02);
  CHECK(rel_rms_diff(out_y, tx_y) < 0.02);
}

TEST_CASE("linear phase removal recovers an injected ramp") {
  const std::size_t n = 1024;
  const cvec clean = random_field(n, 40);
  const double offset = 0.85;
  const double slope = 3.1e-3;
  cvec ramped(n);
  for (std::size_t i = 0; i < n; ++i) {
    ramped[i] = clean[i] * std::polar(1.0, offset + slope * static_cast<double>(i));
  }
  std::vector<std::size_t> pos;
  cvec targets;
  for (std::size_t i = 0; i < n; i += 16) {
    pos.push_back(i);
    targets.push_back(clean[i]);
  }
  const auto [off_est, slope_est] = remove_linear_phase(ramped, pos, targets);
  CHECK(slope_est == doctest::Approx(slope).epsilon(1e-6));
  const double off_wrapped = std::remainder(off_est - offset, 2.0 * kPi);
  CHECK(std::abs(off_wrapped) < 1e-6);
  CHECK(rel_rms_diff(ramped, clean) < 1e-6);
}

TEST_CASE("segmented phase removal pins each save segment") {
  // A stitched stream carries an independent phase line per save segment; a
  // single record-wide fit cannot absorb that, the segment-wise fit must.
  const std::size_t n = 1024;
  const std::size_t seg = 128;
  const cvec clean = random_field(n, 41);
  const double seg_offset[8] = {0.9, -1.7, 2.4, 0.2, -2.9, 1.3, -0.6, 2.0};
  const double seg_slope[8] = {2e-3, -1e-3, 0.0, 3e-3, -2e-3, 1e-3, 2e-3, 0.0};
  cvec walked(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t b = i / seg;
    const double ph = seg_offset[b] + seg_slope[b] * static_cast<double>(i % seg);
    walked[i] = clean[i] * std::polar(1.0, ph);
  }
  std::vector<std::size_t> pos;
  cvec targets;
  for (std::size_t i = 4; i < n; i += 16) {  // 8 anchors per segment
    pos.push_back(i);
    targets.push_back(clean[i]);
  }
  cvec global = walked;
  remove_linear_phase(global, pos, targets);
  CHECK(rel_rms_diff(global, clean) > 0.5);  // record-wide line is not enough
  remove_linear_phase_segmented(walked, pos, targets, seg);
  CHECK(rel_rms_diff(walked, clean) < 1e-6);

  // Degenerate segment length falls back to the record-wide behaviour.
  cvec ramped(n);
  for (std::size_t i = 0; i < n; ++i) {
    ramped[i] = clean[i] * std::polar(1.0, 0.4 + 1e-3 * static_cast<double>(i));
  }
  remove_linear_phase_segmented(ramped, pos, targets, 0);
  CHECK(rel_rms_diff(ramped, clean) < 1e-6);
}

TEST_CASE("predicted waveforms follow the channel estimate") {
  TxConfig shape;
  shape.baud_rate_hz = 30e9;
  shape.samples_per_symbol = 2;
  shape.rolloff = 0.1;
  shape.n_symbols = 512;
  shape.pilot_fraction = 0.1;
  shape.seed = 3;
  const DualPolSymbols tx = generate_dual_pol(shape);

  // Identity estimate, no dispersion: prediction equals the plain shaped
  // waveform.
  const auto [px, py] = predict_received_waveforms(tx, identity_channel(1),
                                                   shape, 0.0, 1550.0);
  const ComplexFrame direct_x = pulse_shape(tx.x.symbols, shape);
  CHECK(rel_rms_diff(px.samples, direct_x.samples) < 1e-12);

  // A pure one-tap rotation scales/rotates both predictions accordingly.
  ChannelEstimate rot = identity_channel(1);
  rot.hxx[0] = cplx(0.0, 1.0);
  rot.hxy[0] = cplx(0.0, 0.0);
  rot.hyx[0] = cplx(0.0, 0.0);
  rot.hyy[0] = cplx(-1.0, 0.0);
  const auto [qx, qy] = predict_received_waveforms(tx, rot, shape, 0.0, 1550.0);
  cvec expected_x = direct_x.samples;
  for (auto& v : expected_x) v *= cplx(0.0, 1.0);
  CHECK(rel_rms_diff(qx.samples, expected_x) < 1e-12);

  // With bulk dispersion the prediction is the dispersed shaped waveform.
  const auto [dx, dy] = predict_received_waveforms(tx, identity_channel(1),
                                                   shape, 650.0, 1550.0);
  const ComplexFrame manual =
      apply_dispersion(direct_x, DispersionSpec{650.0, 1550.0});
  CHECK(rel_rms_diff(dx.samples, manual.samples) < 1e-12);
}

TEST_CASE("the intensity fit recovers the polarization rotation") {
  TxConfig shape;
  shape.baud_rate_hz = 30e9;
  shape.samples_per_symbol = 2;
  shape.rolloff = 0.1;
  shape.n_symbols = 2048;
  shape.pilot_fraction = 0.1;
  shape.seed = 8;
  const DualPolSymbols tx = generate_dual_pol(shape);
  const ComplexFrame wx = pulse_shape(tx.x.symbols, shape);
  const ComplexFrame wy = pulse_shape(tx.y.symbols, shape);

  const Jones j = random_unitary_jones(77);
  const std::size_t n = wx.samples.size();
  ComplexFrame ex{cvec(n), wx.sample_rate_hz};
  ComplexFrame ey{cvec(n), wy.sample_rate_hz};
  for (std::size_t i = 0; i < n; ++i) {
    ex.samples[i] = j[0] * wx.samples[i] + j[1] * wy.samples[i];
    ey.samples[i] = j[2] * wx.samples[i] + j[3] * wy.samples[i];
  }
  const DispersionSpec element{650.0, 1550.0};
  IntensityQuad quad;
  quad.sample_rate_hz = wx.sample_rate_hz;
  quad.a_x.resize(n);
  quad.a_y.resize(n);
  const cvec dx = apply_dispersion(ex, element).samples;
  const cvec dy = apply_dispersion(ey, element).samples;
  quad.b_x.resize(n);
  quad.b_y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    quad.a_x[i] = std::norm(ex.samples[i]);
    quad.a_y[i] = std::norm(ey.samples[i]);
    quad.b_x[i] = std::norm(dx[i]);
    quad.b_y[i] = std::norm(dy[i]);
  }
  // Stride 20 lands every pilot on a zero-ISI symbol center, where a
  // constant-modulus format gives the direct branch constant |u|^2 and |v|^2;
  // the dispersed-branch rows must carry the modulus split on their own.
  std::vector<std::size_t> pilots;
  for (std::size_t i = 0; i < n; i += 20) pilots.push_back(i);

  const Jones fit =
      bootstrap_jones_from_intensity(quad, pilots, wx, wy, element);

  // Each row is recovered up to a common row phase: compare magnitudes and
  // the intra-row phase difference.
  CHECK(std::abs(fit[0]) == doctest::Approx(std::abs(j[0])).epsilon(0.02));
  CHECK(std::abs(fit[1]) == doctest::Approx(std::abs(j[1])).epsilon(0.02));
  CHECK(std::abs(fit[2]) == doctest::Approx(std::abs(j[2])).epsilon(0.02));
  CHECK(std::abs(fit[3]) == doctest::Approx(std::abs(j[3])).epsilon(0.02));
  const cplx row0_true = j[0] * std::conj(j[1]);
  const cplx row0_fit = fit[0] * std::conj(fit[1]);
  CHECK(std::abs(row0_fit - row0_true) < 0.05 * std::abs(row0_true) + 0.01);
  const cplx row1_true = j[2] * std::conj(j[3]);
  const cplx row1_fit = fit[2] * std::conj(fit[3]);
  CHECK(std::abs(row1_fit - row1_true) < 0.05 * std::abs(row1_true) + 0.01);
}

TEST_CASE("the outer loop decodes a clean two polarization frame") {
  TxConfig txc;
  txc.baud_rate_hz = 30e9;
  txc.samples_per_symbol = 2;
  txc.rolloff = 0.1;
  txc.n_symbols = 1024;
  txc.pilot_fraction = 0.2;
  txc.seed = 12;
  const DualPolSymbols tx = generate_dual_pol(txc);
  DualPolFrame wave;
  wave.x = pulse_shape(tx.x.symbols, txc);
  wave.y = pulse_shape(tx.y.symbols, txc);

  LinkConfig link;
  link.jones_seed = 42;
  const DualPolFrame rx = propagate(wave, link);

  FrontendConfig fe;
  fe.element_dispersion_ps_nm = 650.0;
  fe.adc_rate_hz = 60e9;
  fe.optical_bandwidth_hz = 33e9;
  const IntensityQuad quad = adc_convert(detect(rx, fe), fe);

  GsConfig gs;
  gs.max_iterations = 300;
  gs.block_length = 256;
  gs.save_fraction = 0.5;
  gs.seed = 5;
  EqualizerConfig eq;
  eq.n_taps = 5;
  eq.n_outer_iterations = 2;
  eq.bulk_cd_ps_nm = 0.0;

  const DispersionSpec element{fe.element_dispersion_ps_nm, 1550.0};
  const OuterLoopResult res = outer_loop(quad, tx, txc, element, gs, eq, 2);

  REQUIRE(res.eq_x.size() == txc.n_symbols);
  REQUIRE(res.diag.pre_fec_ber.size() == 2);
  CHECK(res.diag.pre_fec_ber.back() < 1e-3);
  CHECK(res.diag.retrieval_converged_fraction.back() > 0.5);
  CHECK(res.estimate.residual < 0.2);
}

TEST_CASE("equalizer configuration validation") {
  EqualizerConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  cfg.n_taps = 0;
  CHECK_THROWS_AS(validate(cfg), config_error);
  cfg = EqualizerConfig{};
  cfg.n_outer_iterations = 0;
  CHECK_THROWS_AS(validate(cfg), config_error);
  cfg = EqualizerConfig{};
  cfg.regularization = -1.0;
  CHECK_THROWS_AS(validate(cfg), config_error);
}
