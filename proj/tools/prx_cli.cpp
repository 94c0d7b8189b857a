#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>

#include "prx/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

// Relative output directories resolve under $PRX_OUTPUT_ROOT when it is set,
// so batch drivers can redirect all artifacts without touching configs.
std::filesystem::path resolve_out_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  if (p.is_absolute()) return p;
  const char* root = std::getenv("PRX_OUTPUT_ROOT");
  if (root != nullptr && root[0] != '\0') {
    return std::filesystem::path(root) / p;
  }
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Carrier-less direct-detection receiver simulator: dual-polarization "
      "Nyquist transmitter, dispersive link, four-intensity frontend, "
      "iterative field retrieval, and MIMO equalization."};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "results";
  std::string report_dir;

  CLI::App* run = app.add_subcommand("run", "Run one experiment config");
  run->add_option("--config", config_path, "Experiment JSON config")
      ->required();
  run->add_option("--out", out_dir, "Output directory (default: results)");

  CLI::App* sweep =
      app.add_subcommand("sweep", "Run the config's sweep grid");
  sweep->add_option("--config", config_path, "Experiment JSON config")
      ->required();
  sweep->add_option("--out", out_dir, "Output directory (default: results)");

  CLI::App* validate =
      app.add_subcommand("validate", "Parse and validate a config, then exit");
  validate->add_option("--config", config_path, "Experiment JSON config")
      ->required();

  CLI::App* report =
      app.add_subcommand("report", "Summarize manifests under a directory");
  report->add_option("--dir", report_dir, "Results directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) {
      const prx::ExperimentConfig cfg =
          prx::load_experiment_config(config_path);
      const std::filesystem::path dir = resolve_out_dir(out_dir);
      const prx::ExperimentResult res = prx::run_experiment(cfg, dir);
      std::printf("label: %s\n", cfg.label.c_str());
      std::printf("ber: %.6g (errors %zu / bits %zu)\n", res.ber.ber,
                  res.ber.bit_errors, res.ber.bit_count);
      if (res.theory_ber > 0.0) {
        std::printf("theory_ber: %.6g\n", res.theory_ber);
      }
      std::printf("evm_x: %.4f", res.evm_x);
      if (cfg.n_polarizations == 2) std::printf("  evm_y: %.4f", res.evm_y);
      std::printf("\nretrieval converged fraction: %.4f\n",
                  res.converged_fraction);
      std::printf("median block a_err: %.2f dB\n", res.median_block_db);
      std::printf("results written to %s\n", dir.string().c_str());
      return kExitOk;
    }
    if (sweep->parsed()) {
      const prx::ExperimentConfig cfg =
          prx::load_experiment_config(config_path);
      const std::filesystem::path dir = resolve_out_dir(out_dir);
      const int failures = prx::run_sweep(cfg, dir);
      std::printf("sweep complete, %d failed point(s), summary in %s\n",
                  failures, (dir / "sweep_summary.csv").string().c_str());
      return failures == 0 ? kExitOk : kExitRuntime;
    }
    if (validate->parsed()) {
      const prx::ExperimentConfig cfg =
          prx::load_experiment_config(config_path);
      std::printf("config ok: %s\n", cfg.label.c_str());
      return kExitOk;
    }
    if (report->parsed()) {
      std::fputs(prx::report_results(resolve_out_dir(report_dir)).c_str(),
                 stdout);
      return kExitOk;
    }
  } catch (const prx::config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitConfig;
}
