#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "fedcpu/config.hpp"

namespace fedcpu {

/// One record per (scheme, seed, round). dmse/qmse/decode_success only apply
/// to schemes that cross the channel; they serialize as empty fields
/// otherwise (quiet NaN / -1 in memory).
struct RoundMetrics {
  std::string scheme;
  std::uint64_t seed = 0;
  int round = 0;
  double dmse = std::numeric_limits<double>::quiet_NaN();
  double qmse = std::numeric_limits<double>::quiet_NaN();
  int decode_success = -1;  // 1, 0, or -1 = not applicable
  double aggregate_error_norm = std::numeric_limits<double>::quiet_NaN();
  double test_accuracy = 0.0;
  double wall_time_ms = 0.0;
};

/// Frozen CSV schema (see README):
/// scheme,seed,round,dmse,qmse,decode_success,aggregate_error_norm,
/// test_accuracy,wall_time_ms
extern const char* const kMetricsCsvHeader;

std::string metrics_csv_row(const RoundMetrics& m);
void write_metrics_csv(const std::string& path,
                       const std::vector<RoundMetrics>& rows);
std::vector<RoundMetrics> read_metrics_csv(const std::string& path);

/// Sweep files carry two leading columns param,value followed by the same
/// schema.
void write_sweep_csv(const std::string& path, const std::string& param,
                     const std::vector<std::pair<std::string,
                                                 std::vector<RoundMetrics>>>& runs);

/// JSON manifest: config echo, seeds, version, the command line, so a CSV
/// can always be reproduced. Returns the manifest text.
std::string write_manifest(const std::string& path, const ExperimentConfig& cfg,
                           const std::string& command_line);
ExperimentConfig config_from_manifest(const std::string& path);

/// Aggregates one or more metrics CSVs into per-(scheme, round) mean and
/// standard-error series suitable for plotting: accuracy mean/stderr, mean
/// dmse/qmse, decode-success rate. Sweep CSVs group per (value, scheme,
/// round) and keep the leading columns.
void emit_plot_data(const std::vector<std::string>& csv_paths,
                    const std::string& out_path);

}  // namespace fedcpu
