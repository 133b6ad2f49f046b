#include "fedcpu/lattice.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fedcpu {

namespace {
constexpr int kSearchRadius = 3;  // Babai +- 3 covers the CVP for mild skew
constexpr double kMinDet = 1e-12;
}  // namespace

Lattice::Lattice(const Eigen::Matrix2d& block_generator, double scale,
                 int dimension, double second_moment)
    : block_generator_(block_generator),
      scale_(scale),
      dimension_(dimension),
      second_moment_(second_moment) {
  if (scale <= 0.0) {
    throw std::invalid_argument("lattice scale must be positive");
  }
  if (dimension <= 0 || dimension % 2 != 0) {
    throw std::invalid_argument("lattice dimension must be a positive even integer");
  }
  scaled_ = scale_ * block_generator_;
  const double det = scaled_.determinant();
  // scale-relative so that tiny rho (the sigma_q^2 -> 0 proxy) stays valid
  if (std::abs(det) <= kMinDet * scaled_.squaredNorm()) {
    throw std::invalid_argument("lattice block generator is singular after scaling");
  }
  scaled_inv_ = scaled_.inverse();
  if (second_moment_ < 0.0) {
    throw std::invalid_argument("lattice second moment must be non-negative");
  }
}

Lattice Lattice::with_second_moment(const Eigen::Matrix2d& block_generator,
                                    double scale, int dimension,
                                    double second_moment) {
  return Lattice(block_generator, scale, dimension, second_moment);
}

Lattice Lattice::create(const Eigen::Matrix2d& block_generator, double scale,
                        int dimension, std::int64_t mc_samples, StreamRng& rng) {
  Lattice lat(block_generator, scale, dimension, 0.0);
  lat.second_moment_ = estimate_second_moment(lat, mc_samples, rng);
  return lat;
}

void Lattice::quantize_block(double x0, double x1, std::int64_t& s0,
                             std::int64_t& s1) const {
  // Babai estimate, then exhaustive search in the window around it.
  const double t0 = scaled_inv_(0, 0) * x0 + scaled_inv_(0, 1) * x1;
  const double t1 = scaled_inv_(1, 0) * x0 + scaled_inv_(1, 1) * x1;
  const std::int64_t b0 = static_cast<std::int64_t>(std::llround(t0));
  const std::int64_t b1 = static_cast<std::int64_t>(std::llround(t1));

  double best = std::numeric_limits<double>::infinity();
  s0 = b0;
  s1 = b1;
  for (std::int64_t i = -kSearchRadius; i <= kSearchRadius; ++i) {
    for (std::int64_t j = -kSearchRadius; j <= kSearchRadius; ++j) {
      const std::int64_t c0 = b0 + i;
      const std::int64_t c1 = b1 + j;
      const double p0 = scaled_(0, 0) * static_cast<double>(c0) +
                        scaled_(0, 1) * static_cast<double>(c1);
      const double p1 = scaled_(1, 0) * static_cast<double>(c0) +
                        scaled_(1, 1) * static_cast<double>(c1);
      const double d0 = x0 - p0;
      const double d1 = x1 - p1;
      const double dist = d0 * d0 + d1 * d1;
      // Strict < plus ascending (i, j) enumeration keeps the
      // lexicographically smallest integer vector on exact ties.
      if (dist < best) {
        best = dist;
        s0 = c0;
        s1 = c1;
      }
    }
  }
}

LatticePoint Lattice::quantize(const Eigen::VectorXd& x) const {
  if (x.size() != dimension_) {
    throw std::invalid_argument("quantize: input length " +
                                std::to_string(x.size()) +
                                " does not match lattice dimension " +
                                std::to_string(dimension_));
  }
  LatticePoint p;
  p.integer_rep.resize(dimension_);
  p.coords.resize(dimension_);
  for (int b = 0; b < dimension_; b += 2) {
    std::int64_t s0 = 0, s1 = 0;
    quantize_block(x[b], x[b + 1], s0, s1);
    p.integer_rep[b] = s0;
    p.integer_rep[b + 1] = s1;
    p.coords[b] = scaled_(0, 0) * static_cast<double>(s0) +
                  scaled_(0, 1) * static_cast<double>(s1);
    p.coords[b + 1] = scaled_(1, 0) * static_cast<double>(s0) +
                      scaled_(1, 1) * static_cast<double>(s1);
  }
  return p;
}

Eigen::VectorXd Lattice::sample_dither(StreamRng& rng) const {
  Eigen::VectorXd d(dimension_);
  for (int b = 0; b < dimension_; b += 2) {
    const double r0 = rng.uniform();
    const double r1 = rng.uniform();
    // uniform over the fundamental parallelepiped of the block
    const double u0 = scaled_(0, 0) * r0 + scaled_(0, 1) * r1;
    const double u1 = scaled_(1, 0) * r0 + scaled_(1, 1) * r1;
    std::int64_t s0 = 0, s1 = 0;
    quantize_block(u0, u1, s0, s1);
    d[b] = u0 - (scaled_(0, 0) * static_cast<double>(s0) +
                 scaled_(0, 1) * static_cast<double>(s1));
    d[b + 1] = u1 - (scaled_(1, 0) * static_cast<double>(s0) +
                     scaled_(1, 1) * static_cast<double>(s1));
  }
  return d;
}

Eigen::VectorXd Lattice::coords_of(const IntVec& integer_rep) const {
  if (integer_rep.size() != dimension_) {
    throw std::invalid_argument("coords_of: integer vector length mismatch");
  }
  Eigen::VectorXd c(dimension_);
  for (int b = 0; b < dimension_; b += 2) {
    const double s0 = static_cast<double>(integer_rep[b]);
    const double s1 = static_cast<double>(integer_rep[b + 1]);
    c[b] = scaled_(0, 0) * s0 + scaled_(0, 1) * s1;
    c[b + 1] = scaled_(1, 0) * s0 + scaled_(1, 1) * s1;
  }
  return c;
}

double estimate_second_moment(const Lattice& lat, std::int64_t n_samples,
                              StreamRng& rng) {
  if (n_samples <= 0) {
    throw std::invalid_argument("estimate_second_moment: n_samples must be positive");
  }
  // One 2-dim block is enough: all blocks are identical copies.
  const Lattice block =
      Lattice::with_second_moment(lat.block_generator(), lat.scale(), 2, 0.0);
  double acc = 0.0;
  for (std::int64_t i = 0; i < n_samples; ++i) {
    const Eigen::VectorXd d = block.sample_dither(rng);
    acc += d.squaredNorm();
  }
  return acc / (2.0 * static_cast<double>(n_samples));
}

}  // namespace fedcpu
