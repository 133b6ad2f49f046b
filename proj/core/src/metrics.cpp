#include "fedcpu/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "fedcpu/version.hpp"

namespace fedcpu {

const char* const kMetricsCsvHeader =
    "scheme,seed,round,dmse,qmse,decode_success,aggregate_error_norm,"
    "test_accuracy,wall_time_ms";

namespace {

std::string fmt_double(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double_or_nan(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::stod(s);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string metrics_csv_row(const RoundMetrics& m) {
  std::ostringstream ss;
  ss << m.scheme << ',' << m.seed << ',' << m.round << ',' << fmt_double(m.dmse)
     << ',' << fmt_double(m.qmse) << ','
     << (m.decode_success < 0 ? std::string()
                              : std::to_string(m.decode_success))
     << ',' << fmt_double(m.aggregate_error_norm) << ','
     << fmt_double(m.test_accuracy) << ',' << fmt_double(m.wall_time_ms);
  return ss.str();
}

void write_metrics_csv(const std::string& path,
                       const std::vector<RoundMetrics>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << kMetricsCsvHeader << '\n';
  for (const auto& m : rows) out << metrics_csv_row(m) << '\n';
}

namespace {

RoundMetrics row_from_fields(const std::vector<std::string>& f, std::size_t off,
                             const std::string& path) {
  if (f.size() != off + 9) {
    throw std::runtime_error("bad column count in " + path);
  }
  RoundMetrics m;
  m.scheme = f[off + 0];
  m.seed = std::stoull(f[off + 1]);
  m.round = std::stoi(f[off + 2]);
  m.dmse = parse_double_or_nan(f[off + 3]);
  m.qmse = parse_double_or_nan(f[off + 4]);
  m.decode_success = f[off + 5].empty() ? -1 : std::stoi(f[off + 5]);
  m.aggregate_error_norm = parse_double_or_nan(f[off + 6]);
  m.test_accuracy = parse_double_or_nan(f[off + 7]);
  m.wall_time_ms = parse_double_or_nan(f[off + 8]);
  return m;
}

}  // namespace

std::vector<RoundMetrics> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV " + path);
  std::vector<RoundMetrics> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(row_from_fields(split_csv_line(line), 0, path));
  }
  return rows;
}

void write_sweep_csv(
    const std::string& path, const std::string& param,
    const std::vector<std::pair<std::string, std::vector<RoundMetrics>>>& runs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "param,value," << kMetricsCsvHeader << '\n';
  for (const auto& [value, rows] : runs) {
    for (const auto& m : rows) {
      out << param << ',' << value << ',' << metrics_csv_row(m) << '\n';
    }
  }
}

std::string write_manifest(const std::string& path, const ExperimentConfig& cfg,
                           const std::string& command_line) {
  nlohmann::json j;
  j["version"] = std::string(kVersion) + "+" + kGitRevision;
  j["command"] = command_line;
  j["config"] = nlohmann::json::parse(config_to_json(cfg));
  const std::string text = j.dump(2);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text << '\n';
  return text;
}

ExperimentConfig config_from_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const auto j = nlohmann::json::parse(ss.str());
  return config_from_json(j.at("config").dump());
}

void emit_plot_data(const std::vector<std::string>& csv_paths,
                    const std::string& out_path) {
  struct Acc {
    int n = 0;
    double acc_sum = 0, acc_sq = 0;
    double dmse_sum = 0;
    int dmse_n = 0;
    double qmse_sum = 0;
    int qmse_n = 0;
    int decode_n = 0, decode_ok = 0;
  };
  // key: (value-or-empty, scheme, round)
  std::map<std::tuple<std::string, std::string, int>, Acc> groups;
  std::string param_name;

  for (const auto& path : csv_paths) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty CSV " + path);
    const auto header = split_csv_line(line);
    const bool sweep = header.size() >= 2 && header[0] == "param";
    if (!sweep && header.size() != 9) {
      throw std::runtime_error("unrecognized CSV header in " + path);
    }
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = split_csv_line(line);
      std::string value;
      std::size_t off = 0;
      if (sweep) {
        param_name = f[0];
        value = f[1];
        off = 2;
      }
      const RoundMetrics m = row_from_fields(f, off, path);
      auto& g = groups[{value, m.scheme, m.round}];
      g.n += 1;
      g.acc_sum += m.test_accuracy;
      g.acc_sq += m.test_accuracy * m.test_accuracy;
      if (!std::isnan(m.dmse)) {
        g.dmse_sum += m.dmse;
        g.dmse_n += 1;
      }
      if (!std::isnan(m.qmse)) {
        g.qmse_sum += m.qmse;
        g.qmse_n += 1;
      }
      if (m.decode_success >= 0) {
        g.decode_n += 1;
        g.decode_ok += m.decode_success;
      }
    }
  }

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  const bool sweep = !param_name.empty();
  if (sweep) out << "param,value,";
  out << "scheme,round,n,accuracy_mean,accuracy_stderr,dmse_mean,qmse_mean,"
         "decode_success_rate\n";
  for (const auto& [key, g] : groups) {
    const auto& [value, scheme, round] = key;
    const double mean = g.acc_sum / g.n;
    const double var =
        g.n > 1 ? std::max(0.0, (g.acc_sq - g.n * mean * mean) / (g.n - 1)) : 0.0;
    const double stderr_ = g.n > 1 ? std::sqrt(var / g.n) : 0.0;
    if (sweep) out << param_name << ',' << value << ',';
    out << scheme << ',' << round << ',' << g.n << ',' << fmt_double(mean) << ','
        << fmt_double(stderr_) << ','
        << fmt_double(g.dmse_n ? g.dmse_sum / g.dmse_n
                               : std::numeric_limits<double>::quiet_NaN())
        << ','
        << fmt_double(g.qmse_n ? g.qmse_sum / g.qmse_n
                               : std::numeric_limits<double>::quiet_NaN())
        << ','
        << fmt_double(g.decode_n ? double(g.decode_ok) / g.decode_n
                                 : std::numeric_limits<double>::quiet_NaN())
        << '\n';
  }
}

}  // namespace fedcpu
