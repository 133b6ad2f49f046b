#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedcpu {

/// Config-file problem with the line it was found on (0 = whole file).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& message)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message
                                    : message),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct ExperimentConfig {
  // [federation]
  int devices = 30;
  int local_epochs = 3;
  double learning_rate = 0.01;
  int batch_size = 100;
  int rounds = 100;
  int classes_per_device = 2;
  double dirichlet_alpha = 1.0;

  // [model]
  int hidden_units = 32;

  // [dataset]
  std::string dataset_kind = "synthetic";  // "synthetic" | "mnist"
  int train_samples = 6000;
  int test_samples = 1000;
  int input_dim = 32;   // synthetic only
  int classes = 10;     // synthetic only
  double blob_noise = 1.5;
  std::uint64_t data_seed = 7;
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;

  // [channel]
  int antennas = 30;
  double snr = 10.0;
  double fading_rate = 5.0;
  double power = 1.0;
  std::string channel_csv;  // optional fixed H^c for regression runs

  // [lattice]
  Eigen::Matrix2d generator{{0.25, 0.0}, {0.125, 0.25}};
  double rho = 1.0;
  std::int64_t second_moment_samples = 1000000;
  std::uint64_t lattice_seed = 1;

  // [run]
  std::vector<std::string> schemes = {"fedcpu", "ideal", "orthogonal_quantized",
                                      "blind_equal"};
  std::vector<std::uint64_t> seeds = {1,  2,  3,  4,  5,  6,  7,  8,  9,  10,
                                      11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
  std::string output_dir = "out";
  bool omit_timing = false;

  /// Desk-scale preset: reduced fleet and antenna count, 30 rounds.
  static ExperimentConfig desk_preset();

  /// Throws ConfigError on invalid field combinations.
  void validate() const;
};

/// Parses the TOML experiment file (tables [federation], [model], [dataset],
/// [channel], [lattice], [run]; unknown keys are errors). Reports problems
/// with line numbers.
ExperimentConfig load_config(const std::string& path);

/// Parse from an in-memory string (tests).
ExperimentConfig parse_config(const std::string& text);

/// JSON round-trip used by the run manifest, so a manifest alone can re-run
/// the experiment.
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& json_text);

}  // namespace fedcpu
