#pragma once

#include "prx/equalizer.hpp"
#include "prx/io.hpp"
#include "prx/metrics.hpp"

namespace prx {

// One end-to-end experiment: waveform generation, link, detection, ADC,
// joint retrieval + equalization, scoring.
struct ExperimentConfig {
  TxConfig tx;
  LinkConfig link;
  FrontendConfig frontend;
  GsConfig gs;
  EqualizerConfig eq;
  int n_polarizations = 2;
  std::uint64_t seed = 1;
  std::string label = "experiment";
  bool dump_waveforms = false;
  // Sweep axes: parameter path -> list of values. Supported paths:
  // link.osnr_db, tx.pilot_fraction, link.total_dispersion_ps_nm,
  // gs.max_iterations, eq.n_outer_iterations.
  std::vector<std::pair<std::string, rvec>> sweep;
};

// Parse + validate a JSON experiment description. Unknown keys and
// out-of-range values raise config_error naming the offending field.
ExperimentConfig parse_experiment_config(const json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
json experiment_config_to_json(const ExperimentConfig& cfg);

struct ExperimentResult {
  BerReport ber;
  double evm_x = 0.0;
  double evm_y = 0.0;
  double theory_ber = 0.0;
  double converged_fraction = 0.0;
  double median_block_db = 0.0;
  double estimated_osnr_db = 0.0;
  // Standard deviation of the per-symbol residual phase error (radians),
  // the receiver's phase-coherence figure.
  double phase_std_x = 0.0;
  double phase_std_y = 0.0;
  std::array<double, 4> aliased_energy_fraction{0.0, 0.0, 0.0, 0.0};
  OuterLoopDiagnostics outer;
  json manifest_results;
};

// Run one experiment, writing results (manifest, CSV traces, equalized
// constellation, optional waveform dumps) under out_dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::filesystem::path& out_dir);

// Run the config's sweep grid; each point lands in out_dir/point_<k>/ and
// the aggregate summary in out_dir/sweep_summary.csv + sweep_manifest.json.
// A failing point is recorded and does not abort the remaining points.
// Returns the number of failed points.
int run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

// Human-readable digest of the manifests below a results directory.
std::string report_results(const std::filesystem::path& out_dir);

}  // namespace prx
