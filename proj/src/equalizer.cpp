#include "prx/equalizer.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "prx/fft.hpp"
#include "prx/metrics.hpp"

namespace prx {

void validate(const EqualizerConfig& cfg) {
  if (cfg.n_taps < 1) throw config_error("eq.n_taps: must be at least 1");
  if (cfg.n_outer_iterations < 1) {
    throw config_error("eq.n_outer_iterations: must be at least 1");
  }
  if (!std::isfinite(cfg.bulk_cd_ps_nm)) {
    throw config_error("eq.bulk_cd_ps_nm: must be finite");
  }
  if (!(cfg.regularization > 0.0)) {
    throw config_error("eq.regularization: must be positive");
  }
}

ChannelEstimate identity_channel(int n_taps) {
  if (n_taps < 1) throw config_error("identity_channel: n_taps must be >= 1");
  ChannelEstimate est;
  est.n_taps = n_taps;
  est.center_tap = n_taps / 2;
  est.hxx.assign(static_cast<std::size_t>(n_taps), cplx(0.0, 0.0));
  est.hxy = est.hxx;
  est.hyx = est.hxx;
  est.hyy = est.hxx;
  est.hxx[static_cast<std::size_t>(est.center_tap)] = 1.0;
  est.hyy[static_cast<std::size_t>(est.center_tap)] = 1.0;
  return est;
}

ComplexFrame compensate_cd(const ComplexFrame& in, double bulk_cd_ps_nm,
                           double center_wavelength_nm) {
  return invert_dispersion(in, {bulk_cd_ps_nm, center_wavelength_nm});
}

ChannelEstimate estimate_channel(const cvec& rx_x, const cvec& rx_y,
                                 const cvec& tx_x, const cvec& tx_y,
                                 const std::vector<std::size_t>& known_positions,
                                 const EqualizerConfig& cfg) {
  validate(cfg);
  const std::size_t n = rx_x.size();
  if (n == 0 || rx_y.size() != n || tx_x.size() != n || tx_y.size() != n) {
    throw config_error("estimate_channel: streams must share a non-zero length");
  }
  const std::size_t taps = static_cast<std::size_t>(cfg.n_taps);
  if (known_positions.size() < 4 * taps) {
    throw config_error(
        "estimate_channel: need at least 4 * n_taps training positions");
  }
  const std::size_t k0 = taps / 2;
  const std::size_t cols = 2 * taps;

  Eigen::MatrixXcd A(static_cast<Eigen::Index>(known_positions.size()),
                     static_cast<Eigen::Index>(cols));
  Eigen::VectorXcd bx(static_cast<Eigen::Index>(known_positions.size()));
  Eigen::VectorXcd by(static_cast<Eigen::Index>(known_positions.size()));
  for (std::size_t r = 0; r < known_positions.size(); ++r) {
    const std::size_t pos = known_positions[r];
    if (pos >= n) {
      throw config_error("estimate_channel: training position out of range");
    }
    for (std::size_t m = 0; m < taps; ++m) {
      // Tap m applies relative delay m - k0 on a circular record.
      const std::size_t src = (pos + n + k0 - m) % n;
      A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(m)) = tx_x[src];
      A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(taps + m)) =
          tx_y[src];
    }
    bx(static_cast<Eigen::Index>(r)) = rx_x[pos];
    by(static_cast<Eigen::Index>(r)) = rx_y[pos];
  }

  Eigen::MatrixXcd G = A.adjoint() * A;
  const double ridge = cfg.regularization * G.real().trace() /
                       static_cast<double>(cols);
  G += ridge * Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(cols),
                                          static_cast<Eigen::Index>(cols));
  Eigen::LDLT<Eigen::MatrixXcd> solver(G);
  const Eigen::VectorXcd hx = solver.solve(A.adjoint() * bx);
  const Eigen::VectorXcd hy = solver.solve(A.adjoint() * by);

  ChannelEstimate est;
  est.n_taps = cfg.n_taps;
  est.center_tap = static_cast<int>(k0);
  est.hxx.resize(taps);
  est.hxy.resize(taps);
  est.hyx.resize(taps);
  est.hyy.resize(taps);
  for (std::size_t m = 0; m < taps; ++m) {
    est.hxx[m] = hx(static_cast<Eigen::Index>(m));
    est.hxy[m] = hx(static_cast<Eigen::Index>(taps + m));
    est.hyx[m] = hy(static_cast<Eigen::Index>(m));
    est.hyy[m] = hy(static_cast<Eigen::Index>(taps + m));
  }

  const double num = (A * hx - bx).squaredNorm() + (A * hy - by).squaredNorm();
  const double den = bx.squaredNorm() + by.squaredNorm();
  est.residual = den > 0.0 ? num / den : 0.0;
  return est;
}

namespace {

// Raw frequency response of a centered tap vector on an n-point grid.
cvec tap_response(const cvec& taps, int center_tap, std::size_t n) {
  cvec padded(n, cplx(0.0, 0.0));
  for (std::size_t m = 0; m < taps.size() && m < n; ++m) padded[m] = taps[m];
  cvec resp = fft::forward(padded);
  const double root_n = std::sqrt(static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    // Undo the unitary 1/sqrt(n) and re-center: delays are m - center_tap.
    const double ph = 2.0 * kPi * static_cast<double>(k) *
                      static_cast<double>(center_tap) / static_cast<double>(n);
    resp[k] *= root_n * cplx(std::cos(ph), std::sin(ph));
  }
  return resp;
}

}  // namespace

void equalize(const cvec& rx_x, const cvec& rx_y, const ChannelEstimate& est,
              double regularization, cvec& out_x, cvec& out_y) {
  const std::size_t n = rx_x.size();
  if (n == 0 || rx_y.size() != n) {
    throw config_error("equalize: streams must share a non-zero length");
  }
  if (est.n_taps < 1 || est.hxx.size() != static_cast<std::size_t>(est.n_taps)) {
    throw config_error("equalize: malformed channel estimate");
  }
  if (!(regularization > 0.0)) {
    throw config_error("equalize: regularization must be positive");
  }
  const cvec fxx = tap_response(est.hxx, est.center_tap, n);
  const cvec fxy = tap_response(est.hxy, est.center_tap, n);
  const cvec fyx = tap_response(est.hyx, est.center_tap, n);
  const cvec fyy = tap_response(est.hyy, est.center_tap, n);
  const cvec sx = fft::forward(rx_x);
  const cvec sy = fft::forward(rx_y);
  cvec ox(n), oy(n);
  for (std::size_t k = 0; k < n; ++k) {
    // MMSE inverse per bin: (H^H H + lambda I)^{-1} H^H applied to (X, Y).
    const cplx hxx = fxx[k], hxy = fxy[k], hyx = fyx[k], hyy = fyy[k];
    const cplx g00 = std::conj(hxx) * hxx + std::conj(hyx) * hyx +
                     regularization;
    const cplx g01 = std::conj(hxx) * hxy + std::conj(hyx) * hyy;
    const cplx g10 = std::conj(hxy) * hxx + std::conj(hyy) * hyx;
    const cplx g11 = std::conj(hxy) * hxy + std::conj(hyy) * hyy +
                     regularization;
    const cplx det = g00 * g11 - g01 * g10;
    const cplx rx = std::conj(hxx) * sx[k] + std::conj(hyx) * sy[k];
    const cplx ry = std::conj(hxy) * sx[k] + std::conj(hyy) * sy[k];
    ox[k] = (g11 * rx - g01 * ry) / det;
    oy[k] = (g00 * ry - g10 * rx) / det;
  }
  out_x = fft::inverse(ox);
  out_y = fft::inverse(oy);
}

namespace {

// (offset, slope) of unit phasors z observed at positions pos: the slope from
// the mean pairwise phase increment (wrap-safe), the offset from the
// slope-compensated circular mean. A single phasor fixes the offset only.
std::pair<double, double> fit_phase_line(const std::vector<cplx>& z,
                                         const std::vector<double>& pos) {
  if (z.empty()) return {0.0, 0.0};
  if (z.size() == 1) return {std::arg(z[0]), 0.0};
  cplx inc(0.0, 0.0);
  for (std::size_t k = 1; k < z.size(); ++k) inc += z[k] * std::conj(z[k - 1]);
  const double mean_dp = (pos.back() - pos.front()) /
                         static_cast<double>(z.size() - 1);
  const double slope =
      mean_dp > 0.0 ? std::arg(inc) / mean_dp : 0.0;
  cplx acc(0.0, 0.0);
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double ph = -slope * pos[k];
    acc += z[k] * cplx(std::cos(ph), std::sin(ph));
  }
  return {std::arg(acc), slope};
}

}  // namespace

std::pair<double, double> remove_linear_phase(
    cvec& field, const std::vector<std::size_t>& positions,
    const cvec& targets) {
  if (positions.size() != targets.size() || positions.size() < 2) {
    throw config_error("remove_linear_phase: need at least two known samples");
  }
  std::vector<cplx> z;
  std::vector<double> pos;
  z.reserve(positions.size());
  for (std::size_t k = 0; k < positions.size(); ++k) {
    if (positions[k] >= field.size()) {
      throw config_error("remove_linear_phase: position out of range");
    }
    const cplx v = field[positions[k]] * std::conj(targets[k]);
    const double m = std::abs(v);
    if (m > 0.0) {
      z.push_back(v / m);
      pos.push_back(static_cast<double>(positions[k]));
    }
  }
  if (z.size() < 2) return {0.0, 0.0};
  const auto [offset, slope] = fit_phase_line(z, pos);
  for (std::size_t i = 0; i < field.size(); ++i) {
    const double ph = -(offset + slope * static_cast<double>(i));
    field[i] *= cplx(std::cos(ph), std::sin(ph));
  }
  return {offset, slope};
}

void remove_linear_phase_segmented(cvec& field,
                                   const std::vector<std::size_t>& positions,
                                   const cvec& targets,
                                   std::size_t segment_len) {
  remove_linear_phase(field, positions, targets);
  if (segment_len == 0 || segment_len >= field.size()) return;
  for (std::size_t s0 = 0; s0 < field.size(); s0 += segment_len) {
    const std::size_t s1 = std::min(s0 + segment_len, field.size());
    std::vector<cplx> z;
    std::vector<double> pos;
    for (std::size_t k = 0; k < positions.size(); ++k) {
      const std::size_t p = positions[k];
      if (p < s0 || p >= s1) continue;
      const cplx v = field[p] * std::conj(targets[k]);
      const double m = std::abs(v);
      if (m > 0.0) {
        z.push_back(v / m);
        pos.push_back(static_cast<double>(p - s0));
      }
    }
    if (z.empty()) continue;  // the record-wide line stays in force here
    const auto [offset, slope] = fit_phase_line(z, pos);
    for (std::size_t i = s0; i < s1; ++i) {
      const double ph = -(offset + slope * static_cast<double>(i - s0));
      field[i] *= cplx(std::cos(ph), std::sin(ph));
    }
  }
}

std::pair<ComplexFrame, ComplexFrame> predict_received_waveforms(
    const DualPolSymbols& tx, const ChannelEstimate& est,
    const TxConfig& shape_cfg, double bulk_cd_ps_nm,
    double center_wavelength_nm) {
  const std::size_t n = tx.x.symbols.size();
  if (n == 0 || tx.y.symbols.size() != n) {
    throw config_error("predict_received_waveforms: symbol streams must share "
                       "a non-zero length");
  }
  const cvec fxx = tap_response(est.hxx, est.center_tap, n);
  const cvec fxy = tap_response(est.hxy, est.center_tap, n);
  const cvec fyx = tap_response(est.hyx, est.center_tap, n);
  const cvec fyy = tap_response(est.hyy, est.center_tap, n);
  const cvec sx = fft::forward(tx.x.symbols);
  const cvec sy = fft::forward(tx.y.symbols);
  cvec px(n), py(n);
  for (std::size_t k = 0; k < n; ++k) {
    px[k] = fxx[k] * sx[k] + fxy[k] * sy[k];
    py[k] = fyx[k] * sx[k] + fyy[k] * sy[k];
  }
  const cvec mx = fft::inverse(px);
  const cvec my = fft::inverse(py);
  const DispersionSpec bulk{bulk_cd_ps_nm, center_wavelength_nm};
  ComplexFrame wx = apply_dispersion(pulse_shape(mx, shape_cfg), bulk);
  ComplexFrame wy = apply_dispersion(pulse_shape(my, shape_cfg), bulk);
  return {std::move(wx), std::move(wy)};
}

Jones bootstrap_jones_from_intensity(
    const IntensityQuad& quad,
    const std::vector<std::size_t>& pilot_samples, const ComplexFrame& ref_x,
    const ComplexFrame& ref_y, const DispersionSpec& element) {
  if (pilot_samples.size() < 8) {
    throw config_error("bootstrap: need at least 8 pilot samples");
  }
  if (ref_x.samples.size() != ref_y.samples.size() || ref_x.samples.empty()) {
    throw config_error("bootstrap: reference waveforms must match");
  }
  // The dispersed branch sees the same rotation: D(j0 u + j1 v) =
  // j0 Du + j1 Dv, so its photocurrent rows share the Gram unknowns and are
  // appended against the dispersed references.
  const cvec dref_x = apply_dispersion(ref_x, element).samples;
  const cvec dref_y = apply_dispersion(ref_y, element).samples;
  const std::size_t np = pilot_samples.size();
  Eigen::MatrixXd M(static_cast<Eigen::Index>(2 * np), 4);
  Eigen::VectorXd vx(static_cast<Eigen::Index>(2 * np));
  Eigen::VectorXd vy(static_cast<Eigen::Index>(2 * np));
  for (std::size_t r = 0; r < np; ++r) {
    const std::size_t p = pilot_samples[r];
    if (p >= ref_x.samples.size() || p >= quad.a_x.size() ||
        p >= quad.a_y.size() || p >= quad.b_x.size() ||
        p >= quad.b_y.size()) {
      throw config_error("bootstrap: pilot sample out of range");
    }
    const auto fill_row = [&M](std::size_t row, cplx u, cplx v) {
      const cplx uv = u * std::conj(v);
      const auto i = static_cast<Eigen::Index>(row);
      M(i, 0) = std::norm(u);
      M(i, 1) = std::norm(v);
      M(i, 2) = 2.0 * uv.real();
      M(i, 3) = -2.0 * uv.imag();
    };
    fill_row(r, ref_x.samples[p], ref_y.samples[p]);
    fill_row(np + r, dref_x[p], dref_y[p]);
    vx(static_cast<Eigen::Index>(r)) = quad.a_x[p];
    vx(static_cast<Eigen::Index>(np + r)) = quad.b_x[p];
    vy(static_cast<Eigen::Index>(r)) = quad.a_y[p];
    vy(static_cast<Eigen::Index>(np + r)) = quad.b_y[p];
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
  const Eigen::Vector4d tx = qr.solve(vx);
  const Eigen::Vector4d ty = qr.solve(vy);

  // |j0 u + j1 v|^2 = p|u|^2 + q|v|^2 + 2 Re(c u conj(v)) with c = j0 conj(j1):
  // recover each row up to a common phase (absorbed downstream by the
  // linear-phase alignment against pilot targets).
  auto row = [](double p, double q, double cr, double ci) {
    const double tiny = 1e-12;
    const cplx c(cr, ci);
    const double pp = std::max(p, tiny);
    const double qq = std::max(q, tiny);
    const double j0 = std::sqrt(pp);
    const double cm = std::abs(c);
    // Geometric-mean magnitude splits the fit error between the two moduli.
    const double j1m = std::pow(qq * std::max(cm * cm / pp, tiny), 0.25);
    const cplx j1 = cm > tiny ? std::conj(c / cm) * j1m : cplx(j1m, 0.0);
    return std::make_pair(cplx(j0, 0.0), j1);
  };
  const auto [jxx, jxy] = row(tx(0), tx(1), tx(2), tx(3));
  const auto [jyy, jyx] = row(ty(1), ty(0), ty(2), -ty(3));
  return {jxx, jxy, jyx, jyy};
}

OuterLoopResult outer_loop(const IntensityQuad& quad, const DualPolSymbols& tx,
                           const TxConfig& tx_cfg,
                           const DispersionSpec& element, const GsConfig& gs,
                           const EqualizerConfig& eq, int n_polarizations) {
  validate(eq);
  if (n_polarizations != 1 && n_polarizations != 2) {
    throw config_error("outer_loop: n_polarizations must be 1 or 2");
  }
  const std::size_t n_sym = tx.x.symbols.size();
  if (n_sym == 0) throw config_error("outer_loop: empty symbol record");
  const double dsp_rate = quad.sample_rate_hz;
  const double sps_d = dsp_rate / tx_cfg.baud_rate_hz;
  const std::size_t sps = static_cast<std::size_t>(std::llround(sps_d));
  if (sps < 2 || std::abs(sps_d - static_cast<double>(sps)) > 1e-9) {
    throw config_error(
        "outer_loop: the converter rate must be an integer multiple (>= 2) of "
        "the baud rate");
  }
  const std::size_t n_samp = n_sym * sps;
  if (quad.a_x.size() != n_samp) {
    throw config_error("outer_loop: intensity record length does not match "
                       "the symbol record");
  }

  TxConfig shape_cfg = tx_cfg;
  shape_cfg.samples_per_symbol = static_cast<int>(sps);

  DualPolSymbols known = tx;
  if (n_polarizations == 1) {
    known.y.symbols.assign(n_sym, cplx(0.0, 0.0));
  }

  std::vector<std::size_t> pilot_samples;
  pilot_samples.reserve(tx.x.pilots.positions.size());
  for (std::size_t p : tx.x.pilots.positions) pilot_samples.push_back(p * sps);
  std::vector<std::size_t> all_positions(n_sym);
  for (std::size_t i = 0; i < n_sym; ++i) all_positions[i] = i;

  const double wl = element.center_wavelength_nm;

  // First-pass channel guess.
  ChannelEstimate est = identity_channel(eq.n_taps);
  if (n_polarizations == 2 && eq.bootstrap == JonesBootstrap::intensity_fit) {
    const auto [rx_ref, ry_ref] = predict_received_waveforms(
        known, identity_channel(1), shape_cfg, eq.bulk_cd_ps_nm, wl);
    const Jones j = bootstrap_jones_from_intensity(quad, pilot_samples, rx_ref,
                                                   ry_ref, element);
    const std::size_t k0 = static_cast<std::size_t>(est.center_tap);
    est.hxx[k0] = j[0];
    est.hxy[k0] = j[1];
    est.hyx[k0] = j[2];
    est.hyy[k0] = j[3];
  }

  OuterLoopResult res;
  cvec warm_x, warm_y;

  for (int outer = 1; outer <= eq.n_outer_iterations; ++outer) {
    const auto [wx, wy] = predict_received_waveforms(
        known, est, shape_cfg, eq.bulk_cd_ps_nm, wl);

    StreamPilots px;
    px.weight = gs.pilot_weight;
    px.positions = pilot_samples;
    px.targets.resize(pilot_samples.size());
    for (std::size_t k = 0; k < pilot_samples.size(); ++k) {
      px.targets[k] = wx.samples[pilot_samples[k]];
    }
    // pilot_weight == 0 runs the retrieval unanchored (the targets are still
    // used below to phase-reference the result).
    const StreamPilots no_pilots;
    const StreamPilots& px_used = gs.pilot_weight == 0.0 ? no_pilots : px;
    GsConfig gs_x = gs;
    StreamResult sr_x = retrieve_stream(quad.a_x, quad.b_x, dsp_rate, element,
                                        gs_x, px_used,
                                        warm_x.empty() ? nullptr : &warm_x);

    StreamResult sr_y;
    if (n_polarizations == 2) {
      StreamPilots py;
      py.weight = gs.pilot_weight;
      py.positions = pilot_samples;
      py.targets.resize(pilot_samples.size());
      for (std::size_t k = 0; k < pilot_samples.size(); ++k) {
        py.targets[k] = wy.samples[pilot_samples[k]];
      }
      const StreamPilots& py_used = gs.pilot_weight == 0.0 ? no_pilots : py;
      GsConfig gs_y = gs;
      gs_y.seed = gs.seed + 1;
      sr_y = retrieve_stream(quad.a_y, quad.b_y, dsp_rate, element, gs_y,
                             py_used,
                             warm_y.empty() ? nullptr : &warm_y);
    }

    // Phase-reference each retrieved field to its pilot targets in the
    // retrieval (pre-CD-compensation) domain, then undo bulk dispersion and
    // decimate to symbol rate. The stream is stitched from save segments of
    // stream_step samples, each carrying its own residual phase line, so the
    // removal is segment-wise.
    const std::size_t stream_step = static_cast<std::size_t>(std::llround(
        gs.save_fraction * static_cast<double>(gs.block_length)));
    auto to_symbols = [&](const cvec& field, const cvec& targets) {
      cvec f = field;
      remove_linear_phase_segmented(f, pilot_samples, targets, stream_step);
      ComplexFrame frame{std::move(f), dsp_rate};
      frame = compensate_cd(frame, eq.bulk_cd_ps_nm, wl);
      cvec syms(n_sym);
      for (std::size_t s = 0; s < n_sym; ++s) syms[s] = frame.samples[s * sps];
      const double rms = std::sqrt(mean_power(syms));
      if (rms > 0.0) {
        for (cplx& v : syms) v /= rms;
      }
      return syms;
    };
    cvec sx = to_symbols(sr_x.field, px.targets);
    cvec sy(n_sym, cplx(0.0, 0.0));
    if (n_polarizations == 2) {
      cvec ty(pilot_samples.size());
      for (std::size_t k = 0; k < pilot_samples.size(); ++k) {
        ty[k] = wy.samples[pilot_samples[k]];
      }
      sy = to_symbols(sr_y.field, ty);
    }

    est = estimate_channel(sx, sy, known.x.symbols, known.y.symbols,
                           all_positions, eq);
    equalize(sx, sy, est, eq.regularization, res.eq_x, res.eq_y);

    // Residual common phase per polarization from the pilot symbols.
    auto pin_phase = [&](cvec& stream, const cvec& ref) {
      cplx acc(0.0, 0.0);
      for (std::size_t p : tx.x.pilots.positions) {
        acc += stream[p] * std::conj(ref[p]);
      }
      const double m = std::abs(acc);
      if (m > 0.0) {
        const cplx rot = std::conj(acc / m);
        for (cplx& v : stream) v *= rot;
      }
    };
    pin_phase(res.eq_x, known.x.symbols);
    if (n_polarizations == 2) pin_phase(res.eq_y, known.y.symbols);

    const BerReport ber = score_ber(
        res.eq_x, res.eq_y, tx, tx_cfg.format, n_polarizations);
    res.diag.pre_fec_ber.push_back(ber.ber);
    res.diag.ls_residual.push_back(est.residual);
    const double conv =
        n_polarizations == 2
            ? 0.5 * (sr_x.converged_fraction + sr_y.converged_fraction)
            : sr_x.converged_fraction;
    res.diag.retrieval_converged_fraction.push_back(conv);
    if (outer == eq.n_outer_iterations) {
      res.diag.block_final_db_x = sr_x.block_final_db;
      res.diag.trace_mean_db_x = sr_x.trace_mean_db;
      if (n_polarizations == 2) {
        res.diag.block_final_db_y = sr_y.block_final_db;
        res.diag.trace_mean_db_y = sr_y.trace_mean_db;
      }
      res.retrieved_x = sr_x.field;
      res.retrieved_y = sr_y.field;
    }
    warm_x = sr_x.field;
    if (n_polarizations == 2) warm_y = sr_y.field;
  }
  res.estimate = est;
  return res;
}

}  // namespace prx
