#pragma once

#include <Eigen/Dense>

#include "fedcpu/rng.hpp"

namespace fedcpu {

/// One-hidden-layer ReLU network with softmax output, stored as a single
/// flat parameter vector so the whole model state is a point in R^d.
///
/// Flat layout: [W1 (input x hidden, column-major), b1,
///               W2 (hidden x classes, column-major), b2].
struct MlpShape {
  int input = 0;
  int hidden = 0;
  int classes = 0;

  int param_count() const {
    return input * hidden + hidden + hidden * classes + classes;
  }
};

class Mlp {
 public:
  Mlp(MlpShape shape, Eigen::VectorXd params);

  /// He-style Gaussian init for W1/W2, zero biases.
  static Mlp init(MlpShape shape, StreamRng& rng);

  const MlpShape& shape() const { return shape_; }
  const Eigen::VectorXd& params() const { return params_; }
  Eigen::VectorXd& params() { return params_; }

  /// Mean cross-entropy over the batch; grad gets the mean gradient.
  /// X is input x batch; y holds class labels.
  double loss_and_grad(const Eigen::MatrixXd& X, const Eigen::VectorXi& y,
                       Eigen::VectorXd& grad) const;

  double loss(const Eigen::MatrixXd& X, const Eigen::VectorXi& y) const;

  /// Class logits, classes x batch.
  Eigen::MatrixXd logits(const Eigen::MatrixXd& X) const;

  double accuracy(const Eigen::MatrixXd& X, const Eigen::VectorXi& y) const;

 private:
  // flat-vector views
  Eigen::Map<const Eigen::MatrixXd> w1() const;
  Eigen::Map<const Eigen::VectorXd> b1() const;
  Eigen::Map<const Eigen::MatrixXd> w2() const;
  Eigen::Map<const Eigen::VectorXd> b2() const;

  MlpShape shape_;
  Eigen::VectorXd params_;
};

}  // namespace fedcpu
