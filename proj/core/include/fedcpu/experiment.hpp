#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fedcpu/config.hpp"
#include "fedcpu/dataset.hpp"
#include "fedcpu/fl.hpp"
#include "fedcpu/lattice.hpp"
#include "fedcpu/metrics.hpp"

namespace fedcpu {

enum class Scheme { kFedCpu, kIdeal, kOrthogonalQuantized, kBlindEqual };

Scheme scheme_from_string(const std::string& name);
std::string to_string(Scheme scheme);

/// Loads the dataset, builds the lattice (second moment estimated once) and
/// runs seeded experiments against them. One session per config.
class ExperimentSession {
 public:
  explicit ExperimentSession(const ExperimentConfig& cfg);

  /// Full T-round loop for one (scheme, seed): partition, local updates,
  /// scheme aggregation, global step, held-out accuracy. Deterministic given
  /// the seed.
  std::vector<RoundMetrics> run(Scheme scheme, std::uint64_t seed) const;

  const Dataset& train() const { return train_; }
  const Dataset& test() const { return test_; }
  const Lattice& lattice() const { return lattice_; }
  const MlpShape& model_shape() const { return shape_; }
  int model_dim() const { return shape_.param_count(); }
  const ExperimentConfig& config() const { return cfg_; }

 private:
  ExperimentConfig cfg_;
  Dataset train_;
  Dataset test_;
  MlpShape shape_;
  Lattice lattice_;
  std::optional<Eigen::MatrixXcd> fixed_channel_;
};

/// Convenience wrapper: one scheme over several seeds, rows concatenated.
std::vector<RoundMetrics> run_experiment(const ExperimentConfig& cfg,
                                         Scheme scheme,
                                         const std::vector<std::uint64_t>& seeds);

/// Runs every configured (scheme, seed) pair and writes metrics.csv plus
/// manifest.json under out_dir. Returns the metrics path.
std::string run_to_files(const ExperimentConfig& cfg, const std::string& out_dir,
                         const std::string& command_line, std::ostream* log);

/// Sweep over M, rho or scheme. Writes one subdirectory per value plus a
/// combined sweep_<param>.csv; returns the combined path.
std::string run_sweep(const ExperimentConfig& cfg, const std::string& param,
                      const std::vector<std::string>& values,
                      const std::string& out_dir, const std::string& command_line,
                      std::ostream* log);

/// Quick self-check suite (closed-form identities, CVP vs brute force,
/// dither statistics, stationarity of the two optima). Prints one line per
/// check; returns the number of failures.
int run_validation(std::ostream& out);

}  // namespace fedcpu
