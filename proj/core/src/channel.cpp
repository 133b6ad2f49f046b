#include "fedcpu/channel.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace fedcpu {

ChannelRealization make_channel(const Eigen::MatrixXcd& complex_gains,
                                double snr, double power) {
  if (snr <= 0.0 || power <= 0.0) {
    throw std::invalid_argument("make_channel: snr and power must be positive");
  }
  ChannelRealization ch;
  ch.complex_gains = complex_gains;
  const auto M = complex_gains.rows();
  const auto K = complex_gains.cols();
  ch.real_stacked.resize(2 * M, K);
  ch.real_stacked.topRows(M) = complex_gains.real();
  ch.real_stacked.bottomRows(M) = complex_gains.imag();
  ch.snr = snr;
  ch.noise_var = power / snr;
  return ch;
}

ChannelRealization draw_channel(int antennas, int devices, double fading_rate,
                                double snr, double power, StreamRng& rng) {
  if (antennas < 1 || devices < 1) {
    throw std::invalid_argument("draw_channel: antennas and devices must be >= 1");
  }
  if (fading_rate <= 0.0) {
    throw std::invalid_argument("draw_channel: fading_rate must be positive");
  }
  Eigen::MatrixXcd hc(antennas, devices);
  for (int m = 0; m < antennas; ++m) {
    for (int k = 0; k < devices; ++k) {
      const double mag = std::sqrt(rng.exponential(fading_rate));
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      hc(m, k) = std::complex<double>(mag * std::cos(phase), mag * std::sin(phase));
    }
  }
  return make_channel(hc, snr, power);
}

Eigen::MatrixXd transmit(const ChannelRealization& ch, const Eigen::MatrixXd& X,
                         StreamRng& noise_rng) {
  if (X.rows() != ch.real_stacked.cols()) {
    throw std::invalid_argument("transmit: X must have one row per device");
  }
  Eigen::MatrixXd Y = ch.real_stacked * X;
  if (ch.noise_var > 0.0) {
    const double sd = std::sqrt(ch.noise_var);
    for (Eigen::Index i = 0; i < Y.rows(); ++i) {
      for (Eigen::Index j = 0; j < Y.cols(); ++j) {
        Y(i, j) += noise_rng.normal(0.0, sd);
      }
    }
  }
  return Y;
}

Eigen::MatrixXcd load_channel_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_channel_csv: cannot open " + path);
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      vals.push_back(std::stod(cell));
    }
    if (vals.size() % 2 != 0) {
      throw std::runtime_error("load_channel_csv: row with odd value count in " + path);
    }
    if (!rows.empty() && vals.size() != rows.front().size()) {
      throw std::runtime_error("load_channel_csv: ragged rows in " + path);
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) {
    throw std::runtime_error("load_channel_csv: empty file " + path);
  }
  const auto M = static_cast<Eigen::Index>(rows.size());
  const auto K = static_cast<Eigen::Index>(rows.front().size() / 2);
  Eigen::MatrixXcd hc(M, K);
  for (Eigen::Index m = 0; m < M; ++m) {
    for (Eigen::Index k = 0; k < K; ++k) {
      hc(m, k) = std::complex<double>(rows[m][2 * k], rows[m][2 * k + 1]);
    }
  }
  return hc;
}

}  // namespace fedcpu
