#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "fedcpu/lattice.hpp"
#include "fedcpu/transceiver.hpp"

namespace fedcpu {

/// Integer aggregation weights. Valid vectors are non-negative and not all
/// zero; the relaxation path additionally keeps every entry >= 1.
struct CoefficientVector {
  IntVec a;

  bool valid() const {
    return a.size() > 0 && (a.array() >= 0).all() && (a.array() != 0).any();
  }
  std::int64_t sum() const { return a.sum(); }
  double squared_norm() const {
    return a.cast<double>().squaredNorm();
  }
};

/// Thrown when every device selected by a has zero reported std, so the
/// normalizing factor is undefined and the round cannot aggregate.
class DegenerateRoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The server's per-round decisions: integer weights, equalization vector,
/// normalizing factor and the two closed-form error predictions.
struct ReceiverPlan {
  CoefficientVector a;
  Eigen::VectorXd b;  // length 2M
  double eta = 0.0;
  double dmse = 0.0;
  double qmse = 0.0;
  bool selection_converged = true;
};

/// Optimal equalization vector for given integer weights:
/// b^T = a^T H^T ((1/SNR) I + H H^T)^{-1}, computed via an SPD solve.
Eigen::VectorXd optimal_b(const Eigen::MatrixXd& H, double snr,
                          const CoefficientVector& a);

/// Closed-form decoding MSE (1 + 2 sigma_q^2) a^T (I + SNR H^T H)^{-1} a,
/// via an SPD solve; per-dimension.
double decoding_mse(const Eigen::MatrixXd& H, double snr,
                    const CoefficientVector& a, double sigma_q2);

/// Decoding MSE of an arbitrary equalizer:
/// (1 + 2 sigma_q^2) (||b^T H - a^T||^2 + ||b||^2 / SNR).
double decoding_mse_for_b(const Eigen::MatrixXd& H, double snr,
                          const CoefficientVector& a, double sigma_q2,
                          const Eigen::VectorXd& b);

struct SelectionResult {
  CoefficientVector a;
  bool converged = true;
};

struct SelectionOptions {
  int max_iterations = 5000;
  double tolerance = 1e-10;  // stop when the iterate moves less than this
};

/// Integer weight selection: projected gradient descent on the convex
/// relaxation min a^T (I + SNR H^T H)^{-1} a over real a >= 1 (fixed step
/// 1/L, L from power iteration), rounded to the nearest integers and clamped
/// to >= 1. The all-ones vector is evaluated as well and the better of the
/// two (by closed-form decoding MSE) is returned, since rounding can
/// degrade.
SelectionResult select_coefficients(const Eigen::MatrixXd& H, double snr,
                                    const SelectionOptions& opts = {});

/// Scales b^T Y by sqrt((1 + 2 sigma_q^2) / P) and quantizes to the nearest
/// lattice point. Decoding errors show up as a wrong lattice point, never as
/// a failure.
LatticePoint decode_combination(const Lattice& lat, const Eigen::MatrixXd& Y,
                                const Eigen::VectorXd& b, double sigma_q2,
                                double power);

/// Optimal normalizing factor (1 + sigma_q^2) ||a||^2 / (a^T diag(sigma) a).
/// Throws DegenerateRoundError when the denominator vanishes.
double optimal_eta(const CoefficientVector& a, const Eigen::VectorXd& sigmas,
                   double sigma_q2);

/// Quantization MSE at a given eta (the general pre-optimization form):
/// (1/(1^T a)^2) (a^T (eta^{-1} I - diag(sigma))^2 a + ||a||^2 sigma_q^2 / eta^2).
double quantization_mse_at(const CoefficientVector& a,
                           const Eigen::VectorXd& sigmas, double sigma_q2,
                           double eta);

/// Quantization MSE at the optimal eta (closed form); per-dimension.
double quantization_mse(const CoefficientVector& a,
                        const Eigen::VectorXd& sigmas, double sigma_q2);

/// Builds the full plan: coefficient selection, equalizer, normalizing
/// factor and both error predictions. Pass force_all_ones to bypass the
/// selection (the blind equal-weight baseline).
ReceiverPlan make_plan(const Eigen::MatrixXd& H, double snr,
                       const Eigen::VectorXd& sigmas, double sigma_q2,
                       bool force_all_ones = false,
                       const SelectionOptions& opts = {});

/// Reconstructs the aggregated model update from the received block:
/// (decoded - a^T D) / (eta 1^T a) + (1/(1^T a)) sum_k a_k mean_k, truncated
/// to output_dim entries. Dithers must be the device dithers reproduced via
/// the shared-randomness contract.
Eigen::VectorXd aggregate(const Lattice& lat, const Eigen::MatrixXd& Y,
                          const ReceiverPlan& plan,
                          const std::vector<Eigen::VectorXd>& dithers,
                          const std::vector<NormalizationParams>& norms,
                          double power, int output_dim);

}  // namespace fedcpu
