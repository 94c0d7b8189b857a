#include "prx/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace prx {

namespace {

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& path) {
  if (!j.is_object()) {
    throw config_error(path + ": expected an object");
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw config_error(path + "." + it.key() + ": unknown field");
    }
  }
}

double get_num(const json& j, const std::string& key, double dflt,
               const std::string& path) {
  if (!j.contains(key)) return dflt;
  const json& v = j.at(key);
  if (v.is_string() && v.get<std::string>() == "inf") {
    return std::numeric_limits<double>::infinity();
  }
  if (!v.is_number()) {
    throw config_error(path + "." + key + ": expected a number");
  }
  return v.get<double>();
}

std::int64_t get_int(const json& j, const std::string& key, std::int64_t dflt,
                     const std::string& path) {
  if (!j.contains(key)) return dflt;
  const json& v = j.at(key);
  if (!v.is_number_integer()) {
    throw config_error(path + "." + key + ": expected an integer");
  }
  return v.get<std::int64_t>();
}

std::uint64_t get_seed(const json& j, const std::string& key,
                       std::uint64_t dflt, const std::string& path) {
  if (!j.contains(key)) return dflt;
  const json& v = j.at(key);
  if (!v.is_number_unsigned() && !v.is_number_integer()) {
    throw config_error(path + "." + key + ": expected a non-negative integer");
  }
  const std::int64_t s = v.get<std::int64_t>();
  if (s < 0) {
    throw config_error(path + "." + key + ": expected a non-negative integer");
  }
  return static_cast<std::uint64_t>(s);
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& j) {
  check_keys(j,
             {"tx", "link", "frontend", "gs", "eq", "n_polarizations", "seed",
              "label", "dump_waveforms", "sweep"},
             "config");
  ExperimentConfig cfg;
  cfg.seed = get_seed(j, "seed", 1, "config");
  if (j.contains("label")) {
    if (!j.at("label").is_string()) {
      throw config_error("config.label: expected a string");
    }
    cfg.label = j.at("label").get<std::string>();
  }
  if (j.contains("dump_waveforms")) {
    if (!j.at("dump_waveforms").is_boolean()) {
      throw config_error("config.dump_waveforms: expected a boolean");
    }
    cfg.dump_waveforms = j.at("dump_waveforms").get<bool>();
  }
  cfg.n_polarizations = static_cast<int>(
      get_int(j, "n_polarizations", 2, "config"));
  if (cfg.n_polarizations != 1 && cfg.n_polarizations != 2) {
    throw config_error("config.n_polarizations: must be 1 or 2");
  }
  if (j.contains("tx")) {
    const json& t = j.at("tx");
    check_keys(t,
               {"format", "baud_rate_hz", "samples_per_symbol", "rolloff",
                "n_symbols", "pilot_fraction", "seed"},
               "tx");
    if (t.contains("format")) {
      if (!t.at("format").is_string()) {
        throw config_error("tx.format: expected a string");
      }
      cfg.tx.format = parse_mod_format(t.at("format").get<std::string>());
    }
    cfg.tx.baud_rate_hz = get_num(t, "baud_rate_hz", 30e9, "tx");
    cfg.tx.samples_per_symbol = static_cast<int>(
        get_int(t, "samples_per_symbol", 4, "tx"));
    cfg.tx.rolloff = get_num(t, "rolloff", 0.1, "tx");
    cfg.tx.n_symbols = static_cast<std::size_t>(
        get_int(t, "n_symbols", 16384, "tx"));
    cfg.tx.pilot_fraction = get_num(t, "pilot_fraction", 0.1, "tx");
    cfg.tx.seed = get_seed(t, "seed", 0, "tx");
  }
  validate(cfg.tx);

  if (j.contains("link")) {
    const json& l = j.at("link");
    check_keys(l,
               {"total_dispersion_ps_nm", "jones_seed", "dgd_ps", "osnr_db",
                "center_wavelength_nm", "noise_seed"},
               "link");
    cfg.link.total_dispersion_ps_nm =
        get_num(l, "total_dispersion_ps_nm", 0.0, "link");
    cfg.link.jones_seed = get_seed(l, "jones_seed", 0, "link");
    cfg.link.dgd_ps = get_num(l, "dgd_ps", 0.0, "link");
    cfg.link.osnr_db = get_num(l, "osnr_db",
                               std::numeric_limits<double>::infinity(), "link");
    cfg.link.center_wavelength_nm =
        get_num(l, "center_wavelength_nm", 1550.0, "link");
    cfg.link.noise_seed = get_seed(l, "noise_seed", 0, "link");
  }
  validate(cfg.link);

  if (j.contains("frontend")) {
    const json& f = j.at("frontend");
    check_keys(f,
               {"element_dispersion_ps_nm", "adc_rate_hz", "electrical_snr_db",
                "seed", "optical_bandwidth_hz", "adc_mode"},
               "frontend");
    cfg.frontend.element_dispersion_ps_nm =
        get_num(f, "element_dispersion_ps_nm", 650.0, "frontend");
    cfg.frontend.adc_rate_hz = get_num(f, "adc_rate_hz", 60e9, "frontend");
    cfg.frontend.electrical_snr_db =
        get_num(f, "electrical_snr_db",
                std::numeric_limits<double>::infinity(), "frontend");
    cfg.frontend.seed = get_seed(f, "seed", 0, "frontend");
    cfg.frontend.optical_bandwidth_hz =
        get_num(f, "optical_bandwidth_hz", 0.0, "frontend");
    if (f.contains("adc_mode")) {
      const std::string mode = f.at("adc_mode").is_string()
                                   ? f.at("adc_mode").get<std::string>()
                                   : std::string();
      if (mode == "point") {
        cfg.frontend.adc_mode = AdcMode::point;
      } else if (mode == "bandlimited") {
        cfg.frontend.adc_mode = AdcMode::bandlimited;
      } else {
        throw config_error(
            "frontend.adc_mode: expected \"point\" or \"bandlimited\"");
      }
    }
  }
  cfg.frontend.center_wavelength_nm = cfg.link.center_wavelength_nm;
  validate(cfg.frontend);

  if (j.contains("gs")) {
    const json& g = j.at("gs");
    check_keys(g,
               {"max_iterations", "epsilon", "restart_period", "block_length",
                "save_fraction", "spectral_support", "seed", "relaxation",
                "edge_guard", "pilot_weight"},
               "gs");
    cfg.gs.max_iterations = static_cast<int>(
        get_int(g, "max_iterations", 500, "gs"));
    cfg.gs.epsilon = get_num(g, "epsilon", 1e-4, "gs");
    cfg.gs.restart_period = static_cast<int>(
        get_int(g, "restart_period", 100, "gs"));
    cfg.gs.block_length = static_cast<int>(
        get_int(g, "block_length", 256, "gs"));
    cfg.gs.save_fraction = get_num(g, "save_fraction", 0.5, "gs");
    if (g.contains("spectral_support")) {
      const json& s = g.at("spectral_support");
      check_keys(s, {"low_hz", "high_hz"}, "gs.spectral_support");
      cfg.gs.spectral_support.low_hz =
          get_num(s, "low_hz", -16.5e9, "gs.spectral_support");
      cfg.gs.spectral_support.high_hz =
          get_num(s, "high_hz", 16.5e9, "gs.spectral_support");
    }
    cfg.gs.seed = get_seed(g, "seed", 0, "gs");
    cfg.gs.relaxation = get_num(g, "relaxation", 0.9, "gs");
    cfg.gs.edge_guard = static_cast<int>(get_int(g, "edge_guard", 8, "gs"));
    cfg.gs.pilot_weight = get_num(g, "pilot_weight", 0.5, "gs");
  }
  validate(cfg.gs, cfg.frontend.adc_rate_hz);

  if (j.contains("eq")) {
    const json& e = j.at("eq");
    check_keys(e,
               {"n_taps", "n_outer_iterations", "bulk_cd_ps_nm",
                "regularization", "bootstrap"},
               "eq");
    cfg.eq.n_taps = static_cast<int>(get_int(e, "n_taps", 20, "eq"));
    cfg.eq.n_outer_iterations = static_cast<int>(
        get_int(e, "n_outer_iterations", 5, "eq"));
    cfg.eq.bulk_cd_ps_nm = get_num(e, "bulk_cd_ps_nm",
                                   cfg.link.total_dispersion_ps_nm, "eq");
    cfg.eq.regularization = get_num(e, "regularization", 1e-3, "eq");
    if (e.contains("bootstrap")) {
      const std::string b = e.at("bootstrap").is_string()
                                ? e.at("bootstrap").get<std::string>()
                                : std::string();
      if (b == "identity") {
        cfg.eq.bootstrap = JonesBootstrap::identity;
      } else if (b == "intensity_fit") {
        cfg.eq.bootstrap = JonesBootstrap::intensity_fit;
      } else {
        throw config_error(
            "eq.bootstrap: expected \"identity\" or \"intensity_fit\"");
      }
    }
  } else {
    cfg.eq.bulk_cd_ps_nm = cfg.link.total_dispersion_ps_nm;
  }
  validate(cfg.eq);

  if (cfg.n_polarizations == 1) {
    if (cfg.link.jones_seed != 0) {
      throw config_error(
          "link.jones_seed: single-polarization runs require the identity "
          "rotation (jones_seed 0)");
    }
    if (cfg.link.dgd_ps != 0.0) {
      throw config_error(
          "link.dgd_ps: single-polarization runs require zero DGD");
    }
  }

  const double sim_rate = cfg.tx.baud_rate_hz * cfg.tx.samples_per_symbol;
  if (cfg.frontend.adc_rate_hz > sim_rate) {
    throw config_error(
        "frontend.adc_rate_hz: cannot exceed the simulation rate");
  }

  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    if (!s.is_object()) throw config_error("sweep: expected an object");
    const std::vector<std::string> known = {
        "link.osnr_db", "tx.pilot_fraction", "link.total_dispersion_ps_nm",
        "gs.max_iterations", "eq.n_outer_iterations"};
    for (auto it = s.begin(); it != s.end(); ++it) {
      if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
        throw config_error("sweep." + it.key() + ": unsupported sweep axis");
      }
      if (!it.value().is_array() || it.value().empty()) {
        throw config_error("sweep." + it.key() +
                           ": expected a non-empty array of numbers");
      }
      rvec vals;
      for (const json& v : it.value()) {
        if (!v.is_number()) {
          throw config_error("sweep." + it.key() + ": expected numbers");
        }
        vals.push_back(v.get<double>());
      }
      cfg.sweep.emplace_back(it.key(), std::move(vals));
    }
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw config_error("config parse error in " + path.string() + ": " +
                       e.what());
  }
  return parse_experiment_config(j);
}

json experiment_config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["label"] = cfg.label;
  j["seed"] = cfg.seed;
  j["n_polarizations"] = cfg.n_polarizations;
  j["dump_waveforms"] = cfg.dump_waveforms;
  j["tx"] = {{"format", to_string(cfg.tx.format)},
             {"baud_rate_hz", cfg.tx.baud_rate_hz},
             {"samples_per_symbol", cfg.tx.samples_per_symbol},
             {"rolloff", cfg.tx.rolloff},
             {"n_symbols", cfg.tx.n_symbols},
             {"pilot_fraction", cfg.tx.pilot_fraction},
             {"seed", cfg.tx.seed}};
  json osnr;
  if (std::isinf(cfg.link.osnr_db)) {
    osnr = "inf";
  } else {
    osnr = cfg.link.osnr_db;
  }
  j["link"] = {{"total_dispersion_ps_nm", cfg.link.total_dispersion_ps_nm},
               {"jones_seed", cfg.link.jones_seed},
               {"dgd_ps", cfg.link.dgd_ps},
               {"osnr_db", osnr},
               {"center_wavelength_nm", cfg.link.center_wavelength_nm},
               {"noise_seed", cfg.link.noise_seed}};
  json esnr;
  if (std::isinf(cfg.frontend.electrical_snr_db)) {
    esnr = "inf";
  } else {
    esnr = cfg.frontend.electrical_snr_db;
  }
  j["frontend"] = {
      {"element_dispersion_ps_nm", cfg.frontend.element_dispersion_ps_nm},
      {"adc_rate_hz", cfg.frontend.adc_rate_hz},
      {"electrical_snr_db", esnr},
      {"seed", cfg.frontend.seed},
      {"optical_bandwidth_hz", cfg.frontend.optical_bandwidth_hz},
      {"adc_mode",
       cfg.frontend.adc_mode == AdcMode::point ? "point" : "bandlimited"}};
  j["gs"] = {{"max_iterations", cfg.gs.max_iterations},
             {"epsilon", cfg.gs.epsilon},
             {"restart_period", cfg.gs.restart_period},
             {"block_length", cfg.gs.block_length},
             {"save_fraction", cfg.gs.save_fraction},
             {"spectral_support",
              {{"low_hz", cfg.gs.spectral_support.low_hz},
               {"high_hz", cfg.gs.spectral_support.high_hz}}},
             {"seed", cfg.gs.seed},
             {"relaxation", cfg.gs.relaxation},
             {"edge_guard", cfg.gs.edge_guard},
             {"pilot_weight", cfg.gs.pilot_weight}};
  j["eq"] = {{"n_taps", cfg.eq.n_taps},
             {"n_outer_iterations", cfg.eq.n_outer_iterations},
             {"bulk_cd_ps_nm", cfg.eq.bulk_cd_ps_nm},
             {"regularization", cfg.eq.regularization},
             {"bootstrap", cfg.eq.bootstrap == JonesBootstrap::identity
                               ? "identity"
                               : "intensity_fit"}};
  if (!cfg.sweep.empty()) {
    json s = json::object();
    for (const auto& [key, vals] : cfg.sweep) s[key] = vals;
    j["sweep"] = s;
  }
  return j;
}

namespace {

// Sub-seeds left at 0 derive from the experiment seed so that sweep points
// get independent noise while explicit seeds stay pinned.
struct EffectiveSeeds {
  std::uint64_t tx, noise, frontend, gs;
};

EffectiveSeeds derive_seeds(const ExperimentConfig& cfg) {
  EffectiveSeeds s{};
  s.tx = cfg.tx.seed != 0 ? cfg.tx.seed : cfg.seed * 2654435761ull + 101ull;
  s.noise = cfg.link.noise_seed != 0 ? cfg.link.noise_seed
                                     : cfg.seed * 2654435761ull + 202ull;
  s.frontend = cfg.frontend.seed != 0 ? cfg.frontend.seed
                                      : cfg.seed * 2654435761ull + 303ull;
  s.gs = cfg.gs.seed != 0 ? cfg.gs.seed : cfg.seed * 2654435761ull + 404ull;
  return s;
}

double median(rvec v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const EffectiveSeeds seeds = derive_seeds(cfg);

  // Transmit record and simulation-rate waveforms.
  TxConfig txc = cfg.tx;
  txc.seed = seeds.tx;
  DualPolSymbols syms = generate_dual_pol(txc);
  if (cfg.n_polarizations == 1) {
    syms.y.symbols.assign(syms.y.symbols.size(), cplx(0.0, 0.0));
    for (auto& b : syms.y.bits) b = 0;
  }
  DualPolFrame tx_wave;
  tx_wave.x = pulse_shape(syms.x.symbols, txc);
  tx_wave.y = pulse_shape(syms.y.symbols, txc);

  // Link.
  DualPolFrame rx_clean = propagate(tx_wave, cfg.link);
  LinkConfig link = cfg.link;
  DualPolFrame rx = load_ase_noise(rx_clean, link.osnr_db, seeds.noise);

  ExperimentResult res;
  if (std::isfinite(link.osnr_db)) {
    res.estimated_osnr_db = estimate_osnr_db(rx, rx_clean);
  } else {
    res.estimated_osnr_db = std::numeric_limits<double>::infinity();
  }

  // Detection and conversion.
  FrontendConfig fe = cfg.frontend;
  fe.seed = seeds.frontend;
  const IntensityQuad sim_quad = detect(rx, fe);
  const IntensityQuad quad = adc_convert(sim_quad, fe);
  res.aliased_energy_fraction = quad.aliased_energy_fraction;

  // Joint retrieval + equalization.
  GsConfig gs = cfg.gs;
  gs.seed = seeds.gs;
  const DispersionSpec element{fe.element_dispersion_ps_nm,
                               fe.center_wavelength_nm};
  const OuterLoopResult loop = outer_loop(quad, syms, txc, element, gs, cfg.eq,
                                          cfg.n_polarizations);

  // Scores.
  res.ber = score_ber(loop.eq_x, loop.eq_y, syms, txc.format,
                      cfg.n_polarizations);
  res.evm_x = error_vector_magnitude(loop.eq_x, syms.x.symbols,
                                     syms.x.pilots.positions);
  if (cfg.n_polarizations == 2) {
    res.evm_y = error_vector_magnitude(loop.eq_y, syms.y.symbols,
                                       syms.y.pilots.positions);
  }
  res.theory_ber = std::isfinite(link.osnr_db)
                       ? theory_ber(txc.format, link.osnr_db, txc.baud_rate_hz,
                                    cfg.n_polarizations)
                       : 0.0;
  res.outer = loop.diag;
  res.converged_fraction =
      loop.diag.retrieval_converged_fraction.empty()
          ? 0.0
          : loop.diag.retrieval_converged_fraction.back();
  rvec all_blocks = loop.diag.block_final_db_x;
  all_blocks.insert(all_blocks.end(), loop.diag.block_final_db_y.begin(),
                    loop.diag.block_final_db_y.end());
  res.median_block_db = median(all_blocks);

  // Artifacts.
  {
    std::vector<rvec> rows;
    const std::size_t nb = loop.diag.block_final_db_x.size();
    for (std::size_t i = 0; i < nb; ++i) {
      rvec row{static_cast<double>(i), loop.diag.block_final_db_x[i]};
      if (cfg.n_polarizations == 2) {
        row.push_back(loop.diag.block_final_db_y[i]);
      }
      rows.push_back(std::move(row));
    }
    std::vector<std::string> hdr{"block", "final_a_err_db_x"};
    if (cfg.n_polarizations == 2) hdr.push_back("final_a_err_db_y");
    write_csv(out_dir / "block_convergence.csv", hdr, rows);
  }
  {
    std::vector<rvec> rows;
    const std::size_t ni = loop.diag.trace_mean_db_x.size();
    for (std::size_t i = 0; i < ni; ++i) {
      rvec row{static_cast<double>(i + 1), loop.diag.trace_mean_db_x[i]};
      if (cfg.n_polarizations == 2) {
        row.push_back(i < loop.diag.trace_mean_db_y.size()
                          ? loop.diag.trace_mean_db_y[i]
                          : loop.diag.trace_mean_db_y.back());
      }
      rows.push_back(std::move(row));
    }
    std::vector<std::string> hdr{"iteration", "mean_a_err_db_x"};
    if (cfg.n_polarizations == 2) hdr.push_back("mean_a_err_db_y");
    write_csv(out_dir / "convergence_trace.csv", hdr, rows);
  }
  {
    std::vector<rvec> rows;
    for (std::size_t s = 0; s < loop.eq_x.size(); ++s) {
      rvec row{loop.eq_x[s].real(), loop.eq_x[s].imag()};
      if (cfg.n_polarizations == 2) {
        row.push_back(loop.eq_y[s].real());
        row.push_back(loop.eq_y[s].imag());
      }
      rows.push_back(std::move(row));
    }
    std::vector<std::string> hdr{"re_x", "im_x"};
    if (cfg.n_polarizations == 2) {
      hdr.push_back("re_y");
      hdr.push_back("im_y");
    }
    write_csv(out_dir / "constellation.csv", hdr, rows);
  }
  {
    const rvec ptx = phase_error_trace(loop.eq_x, syms.x.symbols);
    rvec pty;
    if (cfg.n_polarizations == 2) {
      pty = phase_error_trace(loop.eq_y, syms.y.symbols);
    }
    auto stddev = [](const rvec& v) {
      if (v.empty()) return 0.0;
      double mean = 0.0;
      for (double t : v) mean += t;
      mean /= static_cast<double>(v.size());
      double var = 0.0;
      for (double t : v) var += (t - mean) * (t - mean);
      return std::sqrt(var / static_cast<double>(v.size()));
    };
    res.phase_std_x = stddev(ptx);
    res.phase_std_y = stddev(pty);
    std::vector<rvec> rows;
    for (std::size_t s = 0; s < ptx.size(); ++s) {
      rvec row{static_cast<double>(s), ptx[s]};
      if (cfg.n_polarizations == 2) row.push_back(pty[s]);
      rows.push_back(std::move(row));
    }
    std::vector<std::string> hdr{"symbol", "phase_error_x"};
    if (cfg.n_polarizations == 2) hdr.push_back("phase_error_y");
    write_csv(out_dir / "phase_trace.csv", hdr, rows);
  }
  {
    std::vector<rvec> rows;
    for (std::size_t i = 0; i < loop.diag.pre_fec_ber.size(); ++i) {
      rows.push_back(rvec{static_cast<double>(i + 1), loop.diag.pre_fec_ber[i],
                          loop.diag.ls_residual[i],
                          loop.diag.retrieval_converged_fraction[i]});
    }
    write_csv(out_dir / "outer_iterations.csv",
              {"outer", "ber", "ls_residual", "converged_fraction"}, rows);
  }
  if (cfg.dump_waveforms) {
    const std::filesystem::path wdir = out_dir / "waveforms";
    std::filesystem::create_directories(wdir);
    save_frame(wdir / "tx_x", tx_wave.x, "transmit waveform, x polarization");
    save_frame(wdir / "tx_y", tx_wave.y, "transmit waveform, y polarization");
    save_quad(wdir / "detected", quad);
    ComplexFrame ret_x{loop.retrieved_x, quad.sample_rate_hz};
    save_frame(wdir / "retrieved_x", ret_x, "retrieved field, x polarization");
    if (cfg.n_polarizations == 2) {
      ComplexFrame ret_y{loop.retrieved_y, quad.sample_rate_hz};
      save_frame(wdir / "retrieved_y", ret_y,
                 "retrieved field, y polarization");
    }
  }

  json results;
  results["ber"] = res.ber.ber;
  results["ber_x"] = res.ber.ber_x;
  results["ber_y"] = res.ber.ber_y;
  results["bit_errors"] = res.ber.bit_errors;
  results["bit_count"] = res.ber.bit_count;
  results["evm_x"] = res.evm_x;
  results["evm_y"] = res.evm_y;
  results["theory_ber"] = res.theory_ber;
  results["converged_fraction"] = res.converged_fraction;
  results["median_block_a_err_db"] = res.median_block_db;
  results["phase_std_x"] = res.phase_std_x;
  results["phase_std_y"] = res.phase_std_y;
  results["estimated_osnr_db"] =
      std::isfinite(res.estimated_osnr_db)
          ? json(res.estimated_osnr_db)
          : json("inf");
  results["aliased_energy_fraction"] = res.aliased_energy_fraction;
  results["ls_residual"] = loop.diag.ls_residual;
  results["outer_ber"] = loop.diag.pre_fec_ber;
  results["outer_converged_fraction"] =
      loop.diag.retrieval_converged_fraction;
  res.manifest_results = results;
  write_manifest(out_dir / "manifest.json", experiment_config_to_json(cfg),
                 results);
  return res;
}

namespace {

void apply_sweep_value(ExperimentConfig& cfg, const std::string& key,
                       double value) {
  if (key == "link.osnr_db") {
    cfg.link.osnr_db = value;
  } else if (key == "tx.pilot_fraction") {
    cfg.tx.pilot_fraction = value;
  } else if (key == "link.total_dispersion_ps_nm") {
    cfg.link.total_dispersion_ps_nm = value;
    cfg.eq.bulk_cd_ps_nm = value;
  } else if (key == "gs.max_iterations") {
    cfg.gs.max_iterations = static_cast<int>(std::llround(value));
  } else if (key == "eq.n_outer_iterations") {
    cfg.eq.n_outer_iterations = static_cast<int>(std::llround(value));
  } else {
    throw config_error("sweep." + key + ": unsupported sweep axis");
  }
}

}  // namespace

int run_sweep(const ExperimentConfig& cfg,
              const std::filesystem::path& out_dir) {
  if (cfg.sweep.empty()) {
    throw config_error("sweep: config declares no sweep axes");
  }
  std::filesystem::create_directories(out_dir);
  std::vector<std::size_t> sizes;
  std::size_t total = 1;
  for (const auto& [key, vals] : cfg.sweep) {
    sizes.push_back(vals.size());
    total *= vals.size();
  }

  std::vector<std::string> hdr{"point"};
  for (const auto& [key, vals] : cfg.sweep) hdr.push_back(key);
  hdr.insert(hdr.end(), {"status", "ber", "theory_ber", "converged_fraction",
                         "evm_x"});
  std::vector<rvec> summary;
  json points = json::array();
  int failures = 0;

  for (std::size_t idx = 0; idx < total; ++idx) {
    ExperimentConfig point = cfg;
    point.sweep.clear();
    std::size_t rem = idx;
    json params = json::object();
    rvec row{static_cast<double>(idx)};
    for (std::size_t axis = 0; axis < cfg.sweep.size(); ++axis) {
      const auto& [key, vals] = cfg.sweep[axis];
      const double v = vals[rem % sizes[axis]];
      rem /= sizes[axis];
      apply_sweep_value(point, key, v);
      params[key] = v;
      row.push_back(v);
    }
    point.seed = cfg.seed + 1000003ull * (idx + 1);
    point.label = cfg.label + "/point_" + std::to_string(idx);
    const std::filesystem::path pdir =
        out_dir / ("point_" + std::to_string(idx));
    json entry;
    entry["point"] = idx;
    entry["params"] = params;
    try {
      const ExperimentResult r = run_experiment(point, pdir);
      entry["status"] = "ok";
      entry["ber"] = r.ber.ber;
      entry["theory_ber"] = r.theory_ber;
      entry["converged_fraction"] = r.converged_fraction;
      row.insert(row.end(), {0.0, r.ber.ber, r.theory_ber,
                             r.converged_fraction, r.evm_x});
    } catch (const std::exception& e) {
      ++failures;
      entry["status"] = "failed";
      entry["error"] = e.what();
      row.insert(row.end(), {1.0, -1.0, -1.0, -1.0, -1.0});
    }
    points.push_back(std::move(entry));
    summary.push_back(std::move(row));
  }

  write_csv(out_dir / "sweep_summary.csv", hdr, summary);
  json results;
  results["points"] = points;
  results["failures"] = failures;
  write_manifest(out_dir / "sweep_manifest.json",
                 experiment_config_to_json(cfg), results);
  return failures;
}

std::string report_results(const std::filesystem::path& out_dir) {
  std::ostringstream out;
  if (!std::filesystem::exists(out_dir)) {
    throw config_error("report: no such directory " + out_dir.string());
  }
  std::vector<std::filesystem::path> manifests;
  for (const auto& entry :
       std::filesystem::recursive_directory_iterator(out_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name == "manifest.json" || name == "sweep_manifest.json") {
      manifests.push_back(entry.path());
    }
  }
  std::sort(manifests.begin(), manifests.end());
  if (manifests.empty()) {
    out << "no manifests under " << out_dir.string() << "\n";
    return out.str();
  }
  for (const auto& path : manifests) {
    std::ifstream in(path);
    json m;
    try {
      in >> m;
    } catch (const std::exception&) {
      out << path.string() << ": unreadable manifest\n";
      continue;
    }
    out << path.string() << "\n";
    if (m.contains("config") && m["config"].contains("label")) {
      out << "  label: " << m["config"]["label"].get<std::string>() << "\n";
    }
    if (m.contains("results")) {
      const json& r = m["results"];
      if (r.contains("ber")) {
        out << "  ber: " << r["ber"].dump()
            << "  theory: " << (r.contains("theory_ber") ? r["theory_ber"].dump()
                                                         : "n/a")
            << "\n";
      }
      if (r.contains("converged_fraction")) {
        out << "  converged_fraction: " << r["converged_fraction"].dump()
            << "\n";
      }
      if (r.contains("failures")) {
        out << "  sweep failures: " << r["failures"].dump() << "\n";
      }
      if (r.contains("points")) {
        for (const json& p : r["points"]) {
          out << "  point " << p["point"].dump() << " "
              << p["params"].dump() << " status=" << p["status"].dump();
          if (p.contains("ber")) out << " ber=" << p["ber"].dump();
          out << "\n";
        }
      }
    }
  }
  return out.str();
}

}  // namespace prx
