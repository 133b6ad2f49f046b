#include "fedcpu/receiver.hpp"

#include <cmath>

namespace fedcpu {

namespace {

Eigen::MatrixXd gram_plus_identity(const Eigen::MatrixXd& H, double snr) {
  const auto K = H.cols();
  return Eigen::MatrixXd::Identity(K, K) + snr * (H.transpose() * H);
}

// Largest eigenvalue of A^{-1} via inverse power iteration on the LLT
// factorization of A.
double inverse_spectral_radius(const Eigen::LLT<Eigen::MatrixXd>& llt,
                               Eigen::Index n) {
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n)));
  double lambda = 1.0;
  for (int it = 0; it < 100; ++it) {
    Eigen::VectorXd w = llt.solve(v);
    const double nw = w.norm();
    if (nw == 0.0) break;
    w /= nw;
    const double next = w.dot(llt.solve(w));
    if (std::abs(next - lambda) <= 1e-12 * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
    v = w;
  }
  return lambda;
}

}  // namespace

Eigen::VectorXd optimal_b(const Eigen::MatrixXd& H, double snr,
                          const CoefficientVector& a) {
  if (snr <= 0.0) {
    throw std::invalid_argument("optimal_b: snr must be positive");
  }
  if (a.a.size() != H.cols()) {
    throw std::invalid_argument("optimal_b: coefficient length mismatch");
  }
  const auto rows = H.rows();
  // ((1/SNR) I + H H^T) b = H a  -- always SPD
  Eigen::MatrixXd A = H * H.transpose();
  A.diagonal().array() += 1.0 / snr;
  const Eigen::VectorXd rhs = H * a.a.cast<double>();
  return Eigen::LLT<Eigen::MatrixXd>(A).solve(rhs).head(rows);
}

double decoding_mse(const Eigen::MatrixXd& H, double snr,
                    const CoefficientVector& a, double sigma_q2) {
  const Eigen::VectorXd ad = a.a.cast<double>();
  const Eigen::MatrixXd A = gram_plus_identity(H, snr);
  const Eigen::VectorXd x = Eigen::LLT<Eigen::MatrixXd>(A).solve(ad);
  return (1.0 + 2.0 * sigma_q2) * ad.dot(x);
}

double decoding_mse_for_b(const Eigen::MatrixXd& H, double snr,
                          const CoefficientVector& a, double sigma_q2,
                          const Eigen::VectorXd& b) {
  const Eigen::VectorXd ad = a.a.cast<double>();
  const double mismatch = (H.transpose() * b - ad).squaredNorm();
  return (1.0 + 2.0 * sigma_q2) * (mismatch + b.squaredNorm() / snr);
}

SelectionResult select_coefficients(const Eigen::MatrixXd& H, double snr,
                                    const SelectionOptions& opts) {
  const auto K = H.cols();
  const Eigen::MatrixXd A = gram_plus_identity(H, snr);
  const Eigen::LLT<Eigen::MatrixXd> llt(A);

  // Objective f(a) = a^T A^{-1} a, gradient 2 A^{-1} a; Lipschitz constant
  // of the gradient is 2 lambda_max(A^{-1}).
  const double lip = 2.0 * inverse_spectral_radius(llt, K);
  const double step = 1.0 / lip;

  Eigen::VectorXd a = Eigen::VectorXd::Ones(K);
  bool converged = false;
  for (int it = 0; it < opts.max_iterations; ++it) {
    const Eigen::VectorXd grad = 2.0 * llt.solve(a);
    Eigen::VectorXd next = (a - step * grad).cwiseMax(1.0);
    const double move = (next - a).norm();
    a = std::move(next);
    if (move < opts.tolerance) {
      converged = true;
      break;
    }
  }

  CoefficientVector rounded;
  rounded.a.resize(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    rounded.a[k] = std::max<std::int64_t>(1, std::llround(a[k]));
  }
  CoefficientVector ones;
  ones.a = IntVec::Ones(K);

  // Rounding can degrade; keep whichever of {rounded, all-ones} decodes
  // better. sigma_q2 is a common factor, so 0 is fine for the comparison.
  const double v_rounded = decoding_mse(H, snr, rounded, 0.0);
  const double v_ones = decoding_mse(H, snr, ones, 0.0);
  SelectionResult result;
  result.a = (v_rounded <= v_ones) ? rounded : ones;
  result.converged = converged;
  return result;
}

LatticePoint decode_combination(const Lattice& lat, const Eigen::MatrixXd& Y,
                                const Eigen::VectorXd& b, double sigma_q2,
                                double power) {
  if (Y.rows() != b.size()) {
    throw std::invalid_argument("decode_combination: b length must match Y rows");
  }
  const double scale = std::sqrt((1.0 + 2.0 * sigma_q2) / power);
  const Eigen::VectorXd v = scale * (Y.transpose() * b);
  return lat.quantize(v);
}

double optimal_eta(const CoefficientVector& a, const Eigen::VectorXd& sigmas,
                   double sigma_q2) {
  if (a.a.size() != sigmas.size()) {
    throw std::invalid_argument("optimal_eta: length mismatch");
  }
  const Eigen::VectorXd ad = a.a.cast<double>();
  const double denom = ad.dot(sigmas.cwiseProduct(ad));
  if (denom <= 0.0) {
    throw DegenerateRoundError(
        "optimal_eta: every selected device reported zero std");
  }
  return (1.0 + sigma_q2) * ad.squaredNorm() / denom;
}

double quantization_mse_at(const CoefficientVector& a,
                           const Eigen::VectorXd& sigmas, double sigma_q2,
                           double eta) {
  const Eigen::VectorXd ad = a.a.cast<double>();
  const double ones_a = ad.sum();
  const Eigen::VectorXd scaled = (1.0 / eta - sigmas.array()).matrix().cwiseProduct(ad);
  return (scaled.squaredNorm() + ad.squaredNorm() * sigma_q2 / (eta * eta)) /
         (ones_a * ones_a);
}

double quantization_mse(const CoefficientVector& a,
                        const Eigen::VectorXd& sigmas, double sigma_q2) {
  const Eigen::VectorXd ad = a.a.cast<double>();
  const double ones_a = ad.sum();
  const double s2 = ad.dot(sigmas.array().square().matrix().cwiseProduct(ad));
  const double s1 = ad.dot(sigmas.cwiseProduct(ad));
  return (s2 - s1 * s1 / ((1.0 + sigma_q2) * ad.squaredNorm())) /
         (ones_a * ones_a);
}

ReceiverPlan make_plan(const Eigen::MatrixXd& H, double snr,
                       const Eigen::VectorXd& sigmas, double sigma_q2,
                       bool force_all_ones, const SelectionOptions& opts) {
  ReceiverPlan plan;
  if (force_all_ones) {
    plan.a.a = IntVec::Ones(H.cols());
    plan.selection_converged = true;
  } else {
    auto sel = select_coefficients(H, snr, opts);
    plan.a = std::move(sel.a);
    plan.selection_converged = sel.converged;
  }
  plan.b = optimal_b(H, snr, plan.a);
  plan.eta = optimal_eta(plan.a, sigmas, sigma_q2);
  plan.dmse = decoding_mse(H, snr, plan.a, sigma_q2);
  plan.qmse = quantization_mse(plan.a, sigmas, sigma_q2);
  return plan;
}

Eigen::VectorXd aggregate(const Lattice& lat, const Eigen::MatrixXd& Y,
                          const ReceiverPlan& plan,
                          const std::vector<Eigen::VectorXd>& dithers,
                          const std::vector<NormalizationParams>& norms,
                          double power, int output_dim) {
  const auto K = plan.a.a.size();
  if (static_cast<Eigen::Index>(dithers.size()) != K ||
      static_cast<Eigen::Index>(norms.size()) != K) {
    throw std::invalid_argument("aggregate: need one dither and one norm per device");
  }
  if (output_dim <= 0 || output_dim > lat.dimension()) {
    throw std::invalid_argument("aggregate: bad output dimension");
  }

  const LatticePoint decoded =
      decode_combination(lat, Y, plan.b, lat.second_moment(), power);

  Eigen::VectorXd weighted_dither = Eigen::VectorXd::Zero(lat.dimension());
  double weighted_mean = 0.0;
  for (Eigen::Index k = 0; k < K; ++k) {
    const double ak = static_cast<double>(plan.a.a[k]);
    if (ak == 0.0) continue;
    weighted_dither += ak * dithers[k];
    weighted_mean += ak * norms[k].mean;
  }
  const double ones_a = static_cast<double>(plan.a.sum());

  Eigen::VectorXd full = (decoded.coords - weighted_dither) / (plan.eta * ones_a);
  full.array() += weighted_mean / ones_a;
  return full.head(output_dim);
}

}  // namespace fedcpu
