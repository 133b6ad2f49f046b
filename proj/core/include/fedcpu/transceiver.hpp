#pragma once

#include <Eigen/Dense>
#include <utility>

#include "fedcpu/lattice.hpp"
#include "fedcpu/rng.hpp"

namespace fedcpu {

/// Per-device normalization scalars, reported to the server error-free.
struct NormalizationParams {
  double mean = 0.0;
  double std = 0.0;  // population form (divisor s)
  bool degenerate = false;
};

/// Everything a device produces for one round.
struct EncodedUpdate {
  NormalizationParams norm;
  Eigen::VectorXd dither;      // in the fundamental Voronoi region
  LatticePoint lattice_point;  // quantized normalized update
  Eigen::VectorXd signal;      // power-scaled transmission
  double power = 0.0;          // per-dimension budget P
};

/// Zero-mean unit-variance normalization with population statistics.
/// A vector with std below 1e-12 maps to the zero vector with the
/// degenerate flag set.
std::pair<Eigen::VectorXd, NormalizationParams> normalize(
    const Eigen::VectorXd& delta_w);

/// Full transmitter chain: normalize, dither, quantize, power-scale.
/// delta_w must already be padded to lat.dimension(). Deterministic given
/// the dither stream, so the server can reproduce the dither from the same
/// stream key.
EncodedUpdate encode(const Lattice& lat, const Eigen::VectorXd& delta_w,
                     double power, StreamRng& dither_rng);

/// Zero-pads to the target dimension (no-op if already that long).
Eigen::VectorXd pad_to(const Eigen::VectorXd& v, int dim);

/// Power scale factor sqrt(P / (1 + 2 sigma_q^2)).
double signal_scale(const Lattice& lat, double power);

}  // namespace fedcpu
