#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "fedcpu/rng.hpp"

namespace fedcpu {

using IntVec = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

/// A lattice point carries both its real coordinates and the integer vector
/// that generates it (blockwise), so integer combinations stay exact.
struct LatticePoint {
  Eigen::VectorXd coords;
  IntVec integer_rep;
};

/// Lattice built from 2x2 blocks: the full generator is
/// diag{rho*G2, ..., rho*G2} and is never materialized. Immutable after
/// construction and safe to share across threads.
class Lattice {
 public:
  /// Builds the lattice and caches the per-dimension second moment from a
  /// Monte Carlo estimate (mc_samples Voronoi-uniform block samples).
  static Lattice create(const Eigen::Matrix2d& block_generator, double scale,
                        int dimension, std::int64_t mc_samples, StreamRng& rng);

  /// Builds with a known second moment (tests, rescaled lattices).
  static Lattice with_second_moment(const Eigen::Matrix2d& block_generator,
                                    double scale, int dimension,
                                    double second_moment);

  const Eigen::Matrix2d& block_generator() const { return block_generator_; }
  double scale() const { return scale_; }
  int dimension() const { return dimension_; }
  double second_moment() const { return second_moment_; }
  /// The effective 2x2 block: scale * block_generator.
  const Eigen::Matrix2d& scaled_block() const { return scaled_; }

  /// Nearest lattice point in Euclidean distance. Blockwise-nearest equals
  /// globally-nearest because the generator is block-diagonal; per block the
  /// search enumerates Babai rounding +-3 in each integer coordinate. Ties
  /// resolve to the lexicographically smaller integer vector.
  LatticePoint quantize(const Eigen::VectorXd& x) const;

  /// Uniform sample over the fundamental Voronoi region: uniform over the
  /// fundamental parallelepiped per block, folded by subtracting the nearest
  /// lattice point.
  Eigen::VectorXd sample_dither(StreamRng& rng) const;

  /// Coordinates of the lattice point with the given integer representation.
  Eigen::VectorXd coords_of(const IntVec& integer_rep) const;

 private:
  Lattice(const Eigen::Matrix2d& block_generator, double scale, int dimension,
          double second_moment);

  void quantize_block(double x0, double x1, std::int64_t& s0,
                      std::int64_t& s1) const;

  Eigen::Matrix2d block_generator_;
  double scale_;
  int dimension_;
  double second_moment_;
  Eigen::Matrix2d scaled_;
  Eigen::Matrix2d scaled_inv_;
};

/// Monte Carlo estimate of the per-dimension second moment of the Voronoi
/// region: (1/(2n)) * sum ||d_i||^2 over n 2-dim block samples. Pure; the
/// cached value on Lattice is set at construction.
double estimate_second_moment(const Lattice& lat, std::int64_t n_samples,
                              StreamRng& rng);

}  // namespace fedcpu
