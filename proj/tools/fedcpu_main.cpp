// fedcpu command line: run experiments, sweep parameters, self-check, and
// aggregate metrics CSVs into plot-ready series.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fedcpu/config.hpp"
#include "fedcpu/experiment.hpp"
#include "fedcpu/metrics.hpp"
#include "fedcpu/version.hpp"

namespace {

std::string join_args(int argc, char** argv) {
  std::ostringstream ss;
  for (int i = 0; i < argc; ++i) {
    if (i) ss << ' ';
    ss << argv[i];
  }
  return ss.str();
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// CLI --seeds / --schemes flags and the FEDCPU_OUT_DIR env var override the
// config file.
void apply_overrides(fedcpu::ExperimentConfig& cfg, const std::string& seeds,
                     const std::string& schemes, const std::string& out,
                     bool omit_timing) {
  if (!seeds.empty()) {
    cfg.seeds.clear();
    for (const auto& s : split_list(seeds)) cfg.seeds.push_back(std::stoull(s));
  }
  if (!schemes.empty()) cfg.schemes = split_list(schemes);
  if (!out.empty()) cfg.output_dir = out;
  if (const char* env = std::getenv("FEDCPU_OUT_DIR")) cfg.output_dir = env;
  if (omit_timing) cfg.omit_timing = true;
  cfg.validate();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fedcpu: over-the-air federated learning simulator"};
  app.set_version_flag("--version",
                       std::string(fedcpu::kVersion) + "+" + fedcpu::kGitRevision);
  app.require_subcommand(1);

  std::string config_path, out_dir, seeds_csv, schemes_csv;
  bool omit_timing = false;

  auto* run = app.add_subcommand("run", "run one experiment config");
  run->add_option("--config", config_path, "TOML experiment config")->required();
  run->add_option("--out", out_dir, "output directory (overrides config)");
  run->add_option("--seeds", seeds_csv, "comma-separated seed list override");
  run->add_option("--schemes", schemes_csv, "comma-separated scheme override");
  run->add_flag("--omit-timing", omit_timing,
                "zero the wall_time_ms column for byte-identical replays");

  std::string sweep_param, sweep_values;
  auto* sweep = app.add_subcommand("sweep", "run a parameter sweep");
  sweep->add_option("--config", config_path, "TOML experiment config")->required();
  sweep->add_option("--param", sweep_param, "M | rho | scheme")->required();
  sweep->add_option("--values", sweep_values, "comma-separated values")->required();
  sweep->add_option("--out", out_dir, "output directory (overrides config)");
  sweep->add_option("--seeds", seeds_csv, "comma-separated seed list override");
  sweep->add_option("--schemes", schemes_csv, "comma-separated scheme override");
  sweep->add_flag("--omit-timing", omit_timing, "zero the wall_time_ms column");

  auto* validate = app.add_subcommand("validate", "quick property/oracle suite");

  std::vector<std::string> plot_inputs;
  std::string plot_out;
  auto* plot = app.add_subcommand("emit-plot-data",
                                  "aggregate metrics CSVs into mean/stderr series");
  plot->add_option("--inputs", plot_inputs, "metrics or sweep CSV files")
      ->required()
      ->delimiter(',');
  plot->add_option("--out", plot_out, "output CSV")->required();

  CLI11_PARSE(app, argc, argv);
  const std::string command = join_args(argc, argv);

  try {
    if (run->parsed()) {
      fedcpu::ExperimentConfig cfg;
      try {
        cfg = fedcpu::load_config(config_path);
        apply_overrides(cfg, seeds_csv, schemes_csv, out_dir, omit_timing);
      } catch (const fedcpu::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
      }
      const std::string csv =
          fedcpu::run_to_files(cfg, cfg.output_dir, command, &std::cerr);
      std::cout << csv << "\n";
      return 0;
    }
    if (sweep->parsed()) {
      fedcpu::ExperimentConfig cfg;
      std::string combined;
      try {
        cfg = fedcpu::load_config(config_path);
        apply_overrides(cfg, seeds_csv, schemes_csv, out_dir, omit_timing);
        combined = fedcpu::run_sweep(cfg, sweep_param, split_list(sweep_values),
                                     cfg.output_dir, command, &std::cerr);
      } catch (const fedcpu::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
      }
      std::cout << combined << "\n";
      return 0;
    }
    if (validate->parsed()) {
      const int failures = fedcpu::run_validation(std::cout);
      return failures == 0 ? 0 : 1;
    }
    if (plot->parsed()) {
      fedcpu::emit_plot_data(plot_inputs, plot_out);
      std::cout << plot_out << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
