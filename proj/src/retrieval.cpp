#include "prx/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "prx/fft.hpp"
#include "prx/rng.hpp"

namespace prx {

void validate(const GsConfig& cfg, double sample_rate_hz) {
  if (cfg.max_iterations < 1) {
    throw config_error("gs.max_iterations: must be at least 1");
  }
  if (!(cfg.epsilon > 0.0)) {
    throw config_error("gs.epsilon: must be positive");
  }
  if (cfg.restart_period < 0) {
    throw config_error("gs.restart_period: must be non-negative (0 disables)");
  }
  if (cfg.block_length < 2) {
    throw config_error("gs.block_length: must be at least 2");
  }
  if (!(cfg.save_fraction > 0.0 && cfg.save_fraction <= 1.0)) {
    throw config_error("gs.save_fraction: must lie in (0, 1]");
  }
  if (!(cfg.relaxation >= 0.0 && cfg.relaxation <= 1.0)) {
    throw config_error("gs.relaxation: must lie in [0, 1]");
  }
  if (cfg.edge_guard < 0 || 2 * cfg.edge_guard >= cfg.block_length) {
    throw config_error("gs.edge_guard: must be >= 0 and < block_length / 2");
  }
  if (!(cfg.pilot_weight >= 0.0 && cfg.pilot_weight <= 1.0)) {
    throw config_error("gs.pilot_weight: must lie in [0, 1]");
  }
  validate(cfg.spectral_support, sample_rate_hz);
}

namespace {

constexpr double kDbFloorGuard = 1e-300;

struct BlockCtx {
  std::size_t n = 0;
  cvec hd;                 // dispersive-element transfer on the block grid
  std::vector<char> mask;  // spectral support keep-mask
  rvec sqrt_a;
  rvec sqrt_b;
  const PilotConstraint* pilots = nullptr;
  std::size_t guard = 0;
};

BlockCtx make_ctx(const rvec& a, const rvec& b, double sample_rate_hz,
                  const DispersionSpec& element, const GsConfig& cfg,
                  const PilotConstraint* pilots) {
  if (a.empty() || a.size() != b.size()) {
    throw config_error("retrieval: intensity pair must be non-empty and equal "
                       "length");
  }
  BlockCtx ctx;
  ctx.n = a.size();
  ctx.hd = dispersion_transfer(ctx.n, sample_rate_hz, element);
  ctx.mask = support_mask(ctx.n, sample_rate_hz, cfg.spectral_support);
  ctx.sqrt_a.resize(ctx.n);
  ctx.sqrt_b.resize(ctx.n);
  for (std::size_t i = 0; i < ctx.n; ++i) {
    if (a[i] < 0.0 || b[i] < 0.0) {
      throw config_error("retrieval: intensities must be non-negative");
    }
    ctx.sqrt_a[i] = std::sqrt(a[i]);
    ctx.sqrt_b[i] = std::sqrt(b[i]);
  }
  ctx.pilots = pilots;
  ctx.guard = static_cast<std::size_t>(std::max(cfg.edge_guard, 0));
  if (2 * ctx.guard >= ctx.n) {
    throw config_error("retrieval: block too short for the edge guard");
  }
  if (pilots != nullptr) {
    if (pilots->positions.size() != pilots->targets.size()) {
      throw config_error("retrieval: pilot positions/targets size mismatch");
    }
    if (!(pilots->weight > 0.0 && pilots->weight <= 1.0)) {
      throw config_error("retrieval: pilot weight must lie in (0, 1]");
    }
    for (std::size_t p : pilots->positions) {
      if (p >= ctx.n) {
        throw config_error("retrieval: pilot position outside the block");
      }
    }
  }
  return ctx;
}

inline cplx unit_phase(const cplx& v) {
  const double m = std::abs(v);
  return m > 0.0 ? v / m : cplx(1.0, 0.0);
}

// Measured-plane projection: amplitude replacement plus pilot blending.
cvec project_measured(const BlockCtx& ctx, const cvec& s) {
  cvec out(ctx.n);
  for (std::size_t i = 0; i < ctx.n; ++i) {
    out[i] = ctx.sqrt_a[i] * unit_phase(s[i]);
  }
  if (ctx.pilots != nullptr) {
    const double w = ctx.pilots->weight;
    for (std::size_t k = 0; k < ctx.pilots->positions.size(); ++k) {
      const std::size_t p = ctx.pilots->positions[k];
      out[p] = (1.0 - w) * out[p] + w * ctx.pilots->targets[k];
    }
  }
  return out;
}

// Dispersed-plane projection chain: through the element, amplitude
// replacement away from the guarded edges, back through the element, then
// the spectral-support projection.
cvec project_dispersed(const BlockCtx& ctx, const cvec& s) {
  cvec spec = fft::forward(s);
  for (std::size_t k = 0; k < ctx.n; ++k) spec[k] *= ctx.hd[k];
  cvec d = fft::inverse(spec);
  for (std::size_t i = ctx.guard; i < ctx.n - ctx.guard; ++i) {
    d[i] = ctx.sqrt_b[i] * unit_phase(d[i]);
  }
  spec = fft::forward(d);
  for (std::size_t k = 0; k < ctx.n; ++k) {
    spec[k] = ctx.mask[k] ? spec[k] * std::conj(ctx.hd[k]) : cplx(0.0, 0.0);
  }
  return fft::inverse(spec);
}

double mean_a_err_db(const rvec& a, const cvec& s, std::size_t lo,
                     std::size_t hi) {
  double acc = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double e = a[i] - std::norm(s[i]);
    acc += e * e;
  }
  return db10(acc / static_cast<double>(hi - lo) + kDbFloorGuard);
}

}  // namespace

GsState make_initial_state(const rvec& a, double sample_rate_hz,
                           std::uint64_t seed) {
  if (a.empty()) throw config_error("make_initial_state: empty intensity");
  GsState st;
  st.sample_rate_hz = sample_rate_hz;
  st.s.resize(a.size());
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ph = uniform_phase(rng);
    st.s[i] = std::sqrt(std::max(a[i], 0.0)) * cplx(std::cos(ph), std::sin(ph));
  }
  return st;
}

GsState gs_iterate(GsState state, const rvec& a, const rvec& b,
                   const DispersionSpec& element, const GsConfig& cfg,
                   const PilotConstraint* pilots) {
  if (state.s.size() != a.size()) {
    throw config_error("gs_iterate: state/intensity size mismatch");
  }
  if (!(state.sample_rate_hz > 0.0)) {
    throw config_error("gs_iterate: state sample rate must be positive");
  }
  validate(cfg, state.sample_rate_hz);
  const BlockCtx ctx =
      make_ctx(a, b, state.sample_rate_hz, element, cfg, pilots);
  state.s = project_dispersed(ctx, project_measured(ctx, state.s));
  state.iteration += 1;
  state.a_err_trace_db.push_back(mean_a_err_db(a, state.s, 0, ctx.n));
  return state;
}

GsState stagnation_escape(GsState state, const rvec& a, double epsilon,
                          std::mt19937_64& rng) {
  if (state.s.size() != a.size()) {
    throw config_error("stagnation_escape: state/intensity size mismatch");
  }
  if (!(epsilon > 0.0)) {
    throw config_error("stagnation_escape: epsilon must be positive");
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double e = a[i] - std::norm(state.s[i]);
    if (e * e > epsilon) {
      const double ph = uniform_phase(rng);
      state.s[i] *= cplx(std::cos(ph), std::sin(ph));
    }
  }
  return state;
}

BlockResult retrieve_block(const rvec& a, const rvec& b, double sample_rate_hz,
                           const DispersionSpec& element, const GsConfig& cfg,
                           const BlockOptions& opts) {
  validate(cfg, sample_rate_hz);
  if (a.empty() || a.size() != b.size()) {
    throw config_error("retrieve_block: intensity pair must be non-empty and "
                       "equal length");
  }
  const std::size_t n = a.size();
  const std::size_t lo = opts.save_lo;
  const std::size_t hi = opts.save_hi == 0 ? n : opts.save_hi;
  if (lo >= hi || hi > n) {
    throw config_error("retrieve_block: bad metric window");
  }

  // Power-normalize so that epsilon and the dB trace are scale-invariant.
  double scale = 0.0;
  for (double v : a) scale += v;
  scale /= static_cast<double>(n);
  if (!(scale > 0.0)) scale = 1.0;
  rvec an(n), bn(n);
  for (std::size_t i = 0; i < n; ++i) {
    an[i] = a[i] / scale;
    bn[i] = b[i] / scale;
  }
  const double amp_scale = std::sqrt(scale);
  PilotConstraint pilots_n;
  const PilotConstraint* pilots = nullptr;
  if (opts.pilots != nullptr) {
    pilots_n = *opts.pilots;
    for (cplx& t : pilots_n.targets) t /= amp_scale;
    pilots = &pilots_n;
  }
  const BlockCtx ctx = make_ctx(an, bn, sample_rate_hz, element, cfg, pilots);

  std::mt19937_64 rng(cfg.seed);
  cvec u(n);
  if (opts.warm_start != nullptr) {
    if (opts.warm_start->size() != n) {
      throw config_error("retrieve_block: warm start length mismatch");
    }
    for (std::size_t i = 0; i < n; ++i) u[i] = (*opts.warm_start)[i] / amp_scale;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double ph = uniform_phase(rng);
      u[i] = cplx(std::cos(ph), std::sin(ph));
    }
  }

  const double eps_db = db10(cfg.epsilon);
  BlockResult res;
  res.trace_db.reserve(static_cast<std::size_t>(cfg.max_iterations));
  cvec best;
  double best_db = std::numeric_limits<double>::infinity();

  for (int it = 1; it <= cfg.max_iterations; ++it) {
    const cvec pa = project_measured(ctx, u);
    cvec shat = project_dispersed(ctx, pa);
    const double mdb = mean_a_err_db(an, shat, lo, hi);
    res.trace_db.push_back(mdb);
    res.iterations = it;
    if (mdb < best_db) {
      best_db = mdb;
      best = std::move(shat);
    }
    if (mdb < eps_db) {
      res.converged = true;
      break;
    }
    if (cfg.relaxation == 0.0) {
      // Plain alternating projections: the projected estimate becomes the
      // next iterate. (shat may have been moved into best; recompute cheaply
      // only when it was not.)
      u = (best_db == mdb) ? best : project_dispersed(ctx, pa);
    } else {
      cvec ra(n), pb;
      for (std::size_t i = 0; i < n; ++i) ra[i] = 2.0 * pa[i] - u[i];
      pb = project_dispersed(ctx, ra);
      const double beta = cfg.relaxation;
      for (std::size_t i = 0; i < n; ++i) {
        u[i] = beta * 0.5 * (2.0 * pb[i] - ra[i] + u[i]) +
               (1.0 - beta) * pa[i];
      }
    }
    if (cfg.restart_period > 0 && it % cfg.restart_period == 0 &&
        it < cfg.max_iterations) {
      GsState tmp;
      tmp.s = std::move(u);
      tmp.sample_rate_hz = sample_rate_hz;
      tmp = stagnation_escape(std::move(tmp), an, cfg.epsilon, rng);
      u = std::move(tmp.s);
    }
  }

  res.final_db = best_db;
  res.field.resize(n);
  for (std::size_t i = 0; i < n; ++i) res.field[i] = best[i] * amp_scale;
  return res;
}

StreamResult retrieve_stream(const rvec& a, const rvec& b,
                             double sample_rate_hz,
                             const DispersionSpec& element, const GsConfig& cfg,
                             const StreamPilots& pilots, const cvec* init) {
  validate(cfg, sample_rate_hz);
  if (a.empty() || a.size() != b.size()) {
    throw config_error("retrieve_stream: intensity pair must be non-empty and "
                       "equal length");
  }
  const std::size_t total = a.size();
  const std::size_t block = static_cast<std::size_t>(cfg.block_length);
  const std::size_t step = static_cast<std::size_t>(
      std::llround(cfg.save_fraction * static_cast<double>(block)));
  if (block > total) {
    throw config_error("retrieve_stream: block_length exceeds the record");
  }
  if (step == 0 || step > block) {
    throw config_error("retrieve_stream: save_fraction yields an empty or "
                       "oversized save region");
  }
  if (total % step != 0) {
    throw config_error("retrieve_stream: record length must be a multiple of "
                       "the save step");
  }
  if ((block - step) % 2 != 0) {
    throw config_error("retrieve_stream: block and save lengths must leave an "
                       "even overlap");
  }
  if (pilots.positions.size() != pilots.targets.size()) {
    throw config_error("retrieve_stream: pilot positions/targets mismatch");
  }
  if (init != nullptr && init->size() != total) {
    throw config_error("retrieve_stream: init field length mismatch");
  }

  const std::size_t half = (block - step) / 2;
  const std::size_t n_blocks = total / step;

  StreamResult out;
  out.field.assign(total, cplx(0.0, 0.0));
  out.block_final_db.reserve(n_blocks);
  out.block_iterations.reserve(n_blocks);
  rvec trace_sum;
  std::vector<rvec> block_traces;
  block_traces.reserve(n_blocks);

  // Pilot lookup sorted by record position for per-block slicing.
  std::vector<std::pair<std::size_t, cplx>> pil(pilots.positions.size());
  for (std::size_t i = 0; i < pil.size(); ++i) {
    if (pilots.positions[i] >= total) {
      throw config_error("retrieve_stream: pilot position outside the record");
    }
    pil[i] = {pilots.positions[i], pilots.targets[i]};
  }
  std::sort(pil.begin(), pil.end(),
            [](const auto& l, const auto& r) { return l.first < r.first; });

  cvec prev_est;

  for (std::size_t bi = 0; bi < n_blocks; ++bi) {
    const std::size_t start = (bi * step + total - half) % total;
    rvec a_blk(block), b_blk(block);
    for (std::size_t i = 0; i < block; ++i) {
      const std::size_t src = (start + i) % total;
      a_blk[i] = a[src];
      b_blk[i] = b[src];
    }
    PilotConstraint blk_pilots;
    blk_pilots.weight = pilots.weight;
    for (const auto& [pos, tgt] : pil) {
      const std::size_t local = (pos + total - start) % total;
      if (local < block) {
        blk_pilots.positions.push_back(local);
        blk_pilots.targets.push_back(tgt);
      }
    }

    GsConfig blk_cfg = cfg;
    blk_cfg.seed = cfg.seed + 7919ull * static_cast<std::uint64_t>(bi);

    cvec warm;
    const cvec* warm_ptr = nullptr;
    if (init != nullptr) {
      warm.resize(block);
      for (std::size_t i = 0; i < block; ++i) {
        warm[i] = (*init)[(start + i) % total];
      }
      warm_ptr = &warm;
    } else if (bi > 0 && half > 0) {
      // Seed the overlap region from the previous block's estimate; fill the
      // new samples with measured amplitude and random phase.
      warm.resize(block);
      const std::size_t overlap = block - step;
      for (std::size_t i = 0; i < overlap; ++i) warm[i] = prev_est[step + i];
      std::mt19937_64 rng(blk_cfg.seed ^ 0x5bf0a8f2d6a3c9b1ull);
      for (std::size_t i = overlap; i < block; ++i) {
        const double ph = uniform_phase(rng);
        warm[i] = std::sqrt(std::max(a_blk[i], 0.0)) *
                  cplx(std::cos(ph), std::sin(ph));
      }
      warm_ptr = &warm;
    }

    BlockOptions opts;
    opts.pilots = blk_pilots.positions.empty() ? nullptr : &blk_pilots;
    opts.warm_start = warm_ptr;
    opts.save_lo = half;
    opts.save_hi = half + step;
    BlockResult res = retrieve_block(a_blk, b_blk, sample_rate_hz, element,
                                     blk_cfg, opts);

    // Align the block's global phase to the previous block over the shared
    // overlap so the stitched record is phase-coherent.
    if (bi > 0 && block > step) {
      cplx z(0.0, 0.0);
      const std::size_t overlap = block - step;
      for (std::size_t i = 0; i < overlap; ++i) {
        z += res.field[i] * std::conj(prev_est[step + i]);
      }
      const double m = std::abs(z);
      if (m > 0.0) {
        const cplx rot = std::conj(z / m);
        for (cplx& v : res.field) v *= rot;
      }
    }

    for (std::size_t i = 0; i < step; ++i) {
      out.field[(start + half + i) % total] = res.field[half + i];
    }
    out.block_final_db.push_back(res.final_db);
    out.block_iterations.push_back(res.iterations);
    block_traces.push_back(res.trace_db);
    prev_est = std::move(res.field);
  }

  std::size_t conv = 0;
  for (double v : out.block_final_db) {
    if (v < db10(cfg.epsilon)) ++conv;
  }
  out.converged_fraction =
      static_cast<double>(conv) / static_cast<double>(n_blocks);

  std::size_t max_len = 0;
  for (const rvec& t : block_traces) max_len = std::max(max_len, t.size());
  out.trace_mean_db.assign(max_len, 0.0);
  for (std::size_t it = 0; it < max_len; ++it) {
    double acc = 0.0;
    for (const rvec& t : block_traces) {
      acc += it < t.size() ? t[it] : t.back();
    }
    out.trace_mean_db[it] = acc / static_cast<double>(block_traces.size());
  }
  return out;
}

}  // namespace prx
