#pragma once

#include <Eigen/Dense>
#include <string>

#include "fedcpu/rng.hpp"

namespace fedcpu {

/// One block-fading realization of the uplink: complex M x K gains and the
/// real-valued 2M x K stacking [Re; Im] the receiver works on.
///
/// Noise convention: the additive noise applied by transmit() is i.i.d.
/// zero-mean Gaussian with variance noise_var per REAL entry, so that the
/// equalized noise power is exactly noise_var * ||b||^2. The conventional
/// per-complex-entry split (noise_var/2 per component) would not match the
/// receiver's closed-form decoding MSE; see README.
struct ChannelRealization {
  Eigen::MatrixXcd complex_gains;  // M x K
  Eigen::MatrixXd real_stacked;    // 2M x K
  double noise_var = 0.0;          // per real entry
  double snr = 0.0;                // P / noise_var

  int antennas() const { return static_cast<int>(complex_gains.rows()); }
  int devices() const { return static_cast<int>(complex_gains.cols()); }
};

/// Builds the realization from given complex gains; noise_var = power / snr.
ChannelRealization make_channel(const Eigen::MatrixXcd& complex_gains,
                                double snr, double power);

/// Rayleigh fading: each gain has squared magnitude ~ Exponential(rate =
/// fading_rate) and phase ~ Uniform(0, 2pi), i.i.d. across entries.
ChannelRealization draw_channel(int antennas, int devices, double fading_rate,
                                double snr, double power, StreamRng& rng);

/// Y = H X + Z over the real-valued multiple-access channel. X is K x s
/// (device signals as rows); the result is 2M x s.
Eigen::MatrixXd transmit(const ChannelRealization& ch, const Eigen::MatrixXd& X,
                         StreamRng& noise_rng);

/// Loads a fixed complex gain matrix from CSV: one row per antenna,
/// row-major re,im pairs (2K numbers per row). For regression fixtures.
Eigen::MatrixXcd load_channel_csv(const std::string& path);

}  // namespace fedcpu
