#include "prx/frontend.hpp"

#include <cmath>

#include "prx/fft.hpp"
#include "prx/rng.hpp"

namespace prx {

void validate(const FrontendConfig& cfg) {
  if (cfg.element_dispersion_ps_nm == 0.0) {
    throw config_error(
        "frontend.element_dispersion_ps_nm: must be non-zero (a direct and a "
        "dispersed intensity that coincide carry no phase information)");
  }
  DispersionSpec d{cfg.element_dispersion_ps_nm, cfg.center_wavelength_nm};
  validate(d);
  if (!(cfg.adc_rate_hz > 0.0)) {
    throw config_error("frontend.adc_rate_hz: must be positive");
  }
  if (std::isnan(cfg.electrical_snr_db)) {
    throw config_error("frontend.electrical_snr_db: must be a number or +inf");
  }
}

namespace {

rvec intensity(const cvec& field) {
  rvec out(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) out[i] = std::norm(field[i]);
  return out;
}

void add_electrical_noise(rvec& chan, double snr_db, std::mt19937_64& rng) {
  double mean = 0.0;
  for (double v : chan) mean += v;
  mean /= static_cast<double>(chan.size());
  const double sigma = mean * std::pow(10.0, -snr_db / 20.0);
  for (double& v : chan) {
    v += sigma * gaussian(rng);
    if (v < 0.0) v = 0.0;  // photocurrents cannot go negative
  }
}

}  // namespace

IntensityQuad detect(const DualPolFrame& rx, const FrontendConfig& cfg) {
  validate(cfg);
  if (rx.x.samples.empty() || rx.y.samples.empty()) {
    throw config_error("detect: empty frame");
  }
  if (rx.x.samples.size() != rx.y.samples.size() ||
      rx.x.sample_rate_hz != rx.y.sample_rate_hz) {
    throw config_error("detect: polarizations must share length and rate");
  }
  ComplexFrame fx = rx.x;
  ComplexFrame fy = rx.y;
  if (cfg.optical_bandwidth_hz > 0.0) {
    const SpectralSupport band{-cfg.optical_bandwidth_hz / 2.0,
                               cfg.optical_bandwidth_hz / 2.0};
    fx = project_spectral_support(fx, band);
    fy = project_spectral_support(fy, band);
  }
  const DispersionSpec element{cfg.element_dispersion_ps_nm,
                               cfg.center_wavelength_nm};
  IntensityQuad quad;
  quad.sample_rate_hz = fx.sample_rate_hz;
  quad.a_x = intensity(fx.samples);
  quad.b_x = intensity(apply_dispersion(fx, element).samples);
  quad.a_y = intensity(fy.samples);
  quad.b_y = intensity(apply_dispersion(fy, element).samples);
  if (std::isfinite(cfg.electrical_snr_db)) {
    std::mt19937_64 rng(cfg.seed);
    add_electrical_noise(quad.a_x, cfg.electrical_snr_db, rng);
    add_electrical_noise(quad.b_x, cfg.electrical_snr_db, rng);
    add_electrical_noise(quad.a_y, cfg.electrical_snr_db, rng);
    add_electrical_noise(quad.b_y, cfg.electrical_snr_db, rng);
  }
  return quad;
}

double aliased_energy_fraction(const rvec& x, double sample_rate_hz,
                               double target_rate_hz) {
  if (x.empty()) throw config_error("aliased_energy_fraction: empty input");
  if (!(sample_rate_hz > 0.0) || !(target_rate_hz > 0.0)) {
    throw config_error("aliased_energy_fraction: rates must be positive");
  }
  if (target_rate_hz >= sample_rate_hz) return 0.0;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  cvec ac(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) ac[i] = x[i] - mean;
  const cvec spec = fft::forward(ac);
  const rvec f = fft_freqs(x.size(), sample_rate_hz);
  double total = 0.0;
  double above = 0.0;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double p = std::norm(spec[k]);
    total += p;
    if (std::abs(f[k]) > target_rate_hz / 2.0) above += p;
  }
  return total > 0.0 ? above / total : 0.0;
}

IntensityQuad adc_convert(const IntensityQuad& in, const FrontendConfig& cfg) {
  validate(cfg);
  if (in.a_x.empty()) throw config_error("adc_convert: empty quad");
  if (!(in.sample_rate_hz > 0.0)) {
    throw config_error("adc_convert: quad sample rate must be positive");
  }
  const double target = cfg.adc_rate_hz;
  IntensityQuad out;
  out.sample_rate_hz = target;
  const rvec* chans_in[4] = {&in.a_x, &in.b_x, &in.a_y, &in.b_y};
  rvec* chans_out[4] = {&out.a_x, &out.b_x, &out.a_y, &out.b_y};
  for (int c = 0; c < 4; ++c) {
    out.aliased_energy_fraction[static_cast<std::size_t>(c)] =
        aliased_energy_fraction(*chans_in[c], in.sample_rate_hz, target);
  }
  if (target == in.sample_rate_hz) {
    for (int c = 0; c < 4; ++c) *chans_out[c] = *chans_in[c];
    return out;
  }
  if (cfg.adc_mode == AdcMode::point) {
    const double ratio_d = in.sample_rate_hz / target;
    const std::size_t ratio = static_cast<std::size_t>(std::llround(ratio_d));
    if (ratio < 1 || std::abs(ratio_d - static_cast<double>(ratio)) > 1e-9) {
      throw config_error(
          "adc: point-sampling requires an integer rate ratio; use the "
          "bandlimited mode for fractional conversion");
    }
    for (int c = 0; c < 4; ++c) {
      const rvec& src = *chans_in[c];
      rvec& dst = *chans_out[c];
      dst.resize(src.size() / ratio);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i * ratio];
    }
  } else {
    for (int c = 0; c < 4; ++c) {
      *chans_out[c] = resample_real(*chans_in[c], in.sample_rate_hz, target);
    }
  }
  return out;
}

}  // namespace prx
