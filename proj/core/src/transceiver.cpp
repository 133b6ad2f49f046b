#include "fedcpu/transceiver.hpp"

#include <cmath>
#include <stdexcept>

namespace fedcpu {

namespace {
constexpr double kDegenerateStd = 1e-12;
}

std::pair<Eigen::VectorXd, NormalizationParams> normalize(
    const Eigen::VectorXd& delta_w) {
  if (delta_w.size() == 0) {
    throw std::invalid_argument("normalize: empty vector");
  }
  NormalizationParams params;
  const double n = static_cast<double>(delta_w.size());
  params.mean = delta_w.sum() / n;
  const Eigen::VectorXd centered = delta_w.array() - params.mean;
  params.std = std::sqrt(centered.squaredNorm() / n);
  if (params.std < kDegenerateStd) {
    params.std = 0.0;
    params.degenerate = true;
    return {Eigen::VectorXd::Zero(delta_w.size()), params};
  }
  return {centered / params.std, params};
}

double signal_scale(const Lattice& lat, double power) {
  return std::sqrt(power / (1.0 + 2.0 * lat.second_moment()));
}

EncodedUpdate encode(const Lattice& lat, const Eigen::VectorXd& delta_w,
                     double power, StreamRng& dither_rng) {
  if (delta_w.size() != lat.dimension()) {
    throw std::invalid_argument("encode: update must be padded to the lattice dimension");
  }
  if (power <= 0.0) {
    throw std::invalid_argument("encode: power must be positive");
  }
  EncodedUpdate enc;
  enc.power = power;
  auto [normalized, params] = normalize(delta_w);
  enc.norm = params;
  enc.dither = lat.sample_dither(dither_rng);
  enc.lattice_point = lat.quantize(normalized + enc.dither);
  enc.signal = signal_scale(lat, power) * enc.lattice_point.coords;
  return enc;
}

Eigen::VectorXd pad_to(const Eigen::VectorXd& v, int dim) {
  if (v.size() > dim) {
    throw std::invalid_argument("pad_to: vector longer than target dimension");
  }
  if (v.size() == dim) return v;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim);
  out.head(v.size()) = v;
  return out;
}

}  // namespace fedcpu
