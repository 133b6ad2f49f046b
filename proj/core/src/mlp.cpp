#include "fedcpu/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace fedcpu {

Mlp::Mlp(MlpShape shape, Eigen::VectorXd params)
    : shape_(shape), params_(std::move(params)) {
  if (shape_.input <= 0 || shape_.hidden <= 0 || shape_.classes <= 0) {
    throw std::invalid_argument("Mlp: all shape fields must be positive");
  }
  if (params_.size() != shape_.param_count()) {
    throw std::invalid_argument("Mlp: parameter vector length mismatch");
  }
}

Mlp Mlp::init(MlpShape shape, StreamRng& rng) {
  Eigen::VectorXd w(shape.param_count());
  const double sd1 = std::sqrt(2.0 / shape.input);
  const double sd2 = std::sqrt(2.0 / shape.hidden);
  int i = 0;
  for (int n = 0; n < shape.input * shape.hidden; ++n) w[i++] = rng.normal(0.0, sd1);
  for (int n = 0; n < shape.hidden; ++n) w[i++] = 0.0;
  for (int n = 0; n < shape.hidden * shape.classes; ++n) w[i++] = rng.normal(0.0, sd2);
  for (int n = 0; n < shape.classes; ++n) w[i++] = 0.0;
  return Mlp(shape, std::move(w));
}

Eigen::Map<const Eigen::MatrixXd> Mlp::w1() const {
  return {params_.data(), shape_.input, shape_.hidden};
}
Eigen::Map<const Eigen::VectorXd> Mlp::b1() const {
  return {params_.data() + shape_.input * shape_.hidden, shape_.hidden};
}
Eigen::Map<const Eigen::MatrixXd> Mlp::w2() const {
  return {params_.data() + shape_.input * shape_.hidden + shape_.hidden,
          shape_.hidden, shape_.classes};
}
Eigen::Map<const Eigen::VectorXd> Mlp::b2() const {
  return {params_.data() + shape_.input * shape_.hidden + shape_.hidden +
              shape_.hidden * shape_.classes,
          shape_.classes};
}

Eigen::MatrixXd Mlp::logits(const Eigen::MatrixXd& X) const {
  if (X.rows() != shape_.input) {
    throw std::invalid_argument("Mlp: feature dimension mismatch");
  }
  Eigen::MatrixXd hidden = (w1().transpose() * X).colwise() + b1();
  hidden = hidden.cwiseMax(0.0);
  return (w2().transpose() * hidden).colwise() + b2();
}

namespace {

// column-wise softmax, numerically shifted
Eigen::MatrixXd softmax(Eigen::MatrixXd z) {
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    z.col(c).array() -= z.col(c).maxCoeff();
    z.col(c) = z.col(c).array().exp();
    z.col(c) /= z.col(c).sum();
  }
  return z;
}

}  // namespace

double Mlp::loss_and_grad(const Eigen::MatrixXd& X, const Eigen::VectorXi& y,
                          Eigen::VectorXd& grad) const {
  const auto batch = X.cols();
  if (y.size() != batch || batch == 0) {
    throw std::invalid_argument("Mlp: batch size mismatch or empty batch");
  }

  Eigen::MatrixXd z1 = (w1().transpose() * X).colwise() + b1();
  const Eigen::MatrixXd a1 = z1.cwiseMax(0.0);
  const Eigen::MatrixXd z2 = (w2().transpose() * a1).colwise() + b2();
  const Eigen::MatrixXd p = softmax(z2);

  double loss = 0.0;
  Eigen::MatrixXd dz2 = p;
  for (Eigen::Index c = 0; c < batch; ++c) {
    const int label = y[c];
    if (label < 0 || label >= shape_.classes) {
      throw std::invalid_argument("Mlp: label out of range");
    }
    loss -= std::log(std::max(p(label, c), 1e-300));
    dz2(label, c) -= 1.0;
  }
  loss /= static_cast<double>(batch);
  dz2 /= static_cast<double>(batch);

  const Eigen::MatrixXd dW2 = a1 * dz2.transpose();
  const Eigen::VectorXd db2 = dz2.rowwise().sum();
  Eigen::MatrixXd da1 = w2() * dz2;
  da1 = (z1.array() > 0.0).select(da1, 0.0);
  const Eigen::MatrixXd dW1 = X * da1.transpose();
  const Eigen::VectorXd db1 = da1.rowwise().sum();

  grad.resize(shape_.param_count());
  int off = 0;
  grad.segment(off, dW1.size()) = Eigen::Map<const Eigen::VectorXd>(dW1.data(), dW1.size());
  off += static_cast<int>(dW1.size());
  grad.segment(off, db1.size()) = db1;
  off += static_cast<int>(db1.size());
  grad.segment(off, dW2.size()) = Eigen::Map<const Eigen::VectorXd>(dW2.data(), dW2.size());
  off += static_cast<int>(dW2.size());
  grad.segment(off, db2.size()) = db2;
  return loss;
}

double Mlp::loss(const Eigen::MatrixXd& X, const Eigen::VectorXi& y) const {
  const Eigen::MatrixXd p = softmax(logits(X));
  double loss = 0.0;
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    loss -= std::log(std::max(p(y[c], c), 1e-300));
  }
  return loss / static_cast<double>(X.cols());
}

double Mlp::accuracy(const Eigen::MatrixXd& X, const Eigen::VectorXi& y) const {
  const Eigen::MatrixXd z = logits(X);
  int correct = 0;
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    Eigen::Index arg = 0;
    z.col(c).maxCoeff(&arg);
    if (static_cast<int>(arg) == y[c]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(z.cols());
}

}  // namespace fedcpu
