#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fedcpu/transceiver.hpp"
#include "oracles.hpp"

using namespace fedcpu;

namespace {
const Eigen::Matrix2d kPaperBlock{{0.25, 0.0}, {0.125, 0.25}};

Lattice paper_lattice(int dim, double rho = 1.0) {
  return Lattice::with_second_moment(kPaperBlock, rho, dim,
                                     rho * rho * oracles::kGoldenSecondMoment);
}
}  // namespace

TEST_CASE("normalize (1,2,3)") {
  Eigen::VectorXd v(3);
  v << 1.0, 2.0, 3.0;
  const auto [n, p] = normalize(v);
  CHECK(p.mean == doctest::Approx(2.0));
  CHECK(p.std == doctest::Approx(std::sqrt(2.0 / 3.0)));
  CHECK_FALSE(p.degenerate);
  const double scale = 1.0 / std::sqrt(2.0 / 3.0);
  CHECK(n[0] == doctest::Approx(-scale));
  CHECK(n[1] == doctest::Approx(0.0));
  CHECK(n[2] == doctest::Approx(scale));
}

TEST_CASE("normalize constant vector is degenerate") {
  Eigen::VectorXd v = Eigen::VectorXd::Constant(5, 3.7);
  const auto [n, p] = normalize(v);
  CHECK(p.mean == doctest::Approx(3.7));
  CHECK(p.std == 0.0);
  CHECK(p.degenerate);
  CHECK(n.isZero());
}

TEST_CASE("normalize output has zero mean and unit population variance") {
  StreamRng rng(10, "norm-prop");
  Eigen::VectorXd v(1000);
  for (int i = 0; i < v.size(); ++i) v[i] = rng.normal(3.0, 2.5);
  const auto [n, p] = normalize(v);
  (void)p;
  CHECK(std::abs(n.mean()) < 1e-9);
  const double var = n.squaredNorm() / double(n.size());
  CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("normalize rejects the empty vector") {
  CHECK_THROWS_AS(normalize(Eigen::VectorXd()), std::invalid_argument);
}

TEST_CASE("vanishing-quantization round trip (tiny rho)") {
  const int dim = 64;
  const Lattice lat = paper_lattice(dim, 1e-6);
  StreamRng data_rng(11, "roundtrip-data");
  Eigen::VectorXd dw(dim);
  for (int i = 0; i < dim; ++i) dw[i] = data_rng.normal(0.0, 0.3);

  StreamRng dith(11, "dither", 0, 0);
  const EncodedUpdate enc = encode(lat, dw, 1.0, dith);
  const Eigen::VectorXd recon =
      ((enc.lattice_point.coords - enc.dither) * enc.norm.std).array() +
      enc.norm.mean;
  for (int i = 0; i < dim; ++i) {
    REQUIRE(std::abs(recon[i] - dw[i]) < 1e-4);
  }
}

TEST_CASE("signal is the exact power scaling of the lattice point") {
  const Lattice lat = paper_lattice(16);
  StreamRng rng(12, "scale");
  Eigen::VectorXd dw(16);
  for (int i = 0; i < 16; ++i) dw[i] = rng.normal();
  StreamRng dith(12, "dither", 3, 1);
  const double P = 2.5;
  const EncodedUpdate enc = encode(lat, dw, P, dith);
  const double scale = std::sqrt(P / (1.0 + 2.0 * lat.second_moment()));
  CHECK((enc.signal - scale * enc.lattice_point.coords).norm() == 0.0);
  CHECK(lat.quantize(enc.dither).integer_rep.isZero());
}

TEST_CASE("dither reproduced from the same stream key is bit-exact") {
  const Lattice lat = paper_lattice(32);
  const RngFactory streams{99};
  auto device_rng = streams.stream("dither", 4, 17);
  StreamRng data_rng(13, "dw");
  Eigen::VectorXd dw(32);
  for (int i = 0; i < 32; ++i) dw[i] = data_rng.normal();
  const EncodedUpdate enc = encode(lat, dw, 1.0, device_rng);

  auto server_rng = streams.stream("dither", 4, 17);
  const Eigen::VectorXd server_dither = lat.sample_dither(server_rng);
  CHECK((enc.dither - server_dither).norm() == 0.0);
}

TEST_CASE("per-dimension transmit power stays within the budget") {
  const int dim = 32;
  const Lattice lat = paper_lattice(dim);
  StreamRng data_rng(14, "power-data");
  StreamRng dith(14, "power-dither");
  const double P = 1.0;
  double energy = 0.0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd dw(dim);
    for (int i = 0; i < dim; ++i) dw[i] = data_rng.normal();
    const EncodedUpdate enc = encode(lat, dw, P, dith);
    energy += enc.signal.squaredNorm() / dim;
  }
  CHECK(energy / trials <= 1.02 * P);
}

TEST_CASE("dithered quantization is unbiased for a fixed input") {
  const Lattice lat = paper_lattice(2);
  StreamRng dith(15, "unbiased");
  Eigen::VectorXd w(2);
  w << 0.43, -0.17;
  const int n = 10000;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  Eigen::Vector2d sumsq = Eigen::Vector2d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd d = lat.sample_dither(dith);
    const Eigen::VectorXd est = lat.quantize(w + d).coords - d;
    sum += est;
    sumsq += est.cwiseProduct(est);
  }
  for (int c = 0; c < 2; ++c) {
    const double mean = sum[c] / n;
    const double var = sumsq[c] / n - mean * mean;
    const double se = std::sqrt(var / n);
    CHECK(std::abs(mean - w[c]) < 3.0 * se);
  }
}

TEST_CASE("channel-free round trip leaves exactly the quantization error") {
  const int dim = 512;
  const Lattice lat = paper_lattice(dim);
  StreamRng data_rng(16, "rt-data");
  StreamRng dith(16, "rt-dither");
  double err_sq = 0.0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd dw(dim);
    for (int i = 0; i < dim; ++i) dw[i] = data_rng.normal(0.1, 0.7);
    const EncodedUpdate enc = encode(lat, dw, 1.0, dith);
    const Eigen::VectorXd recon =
        ((enc.lattice_point.coords - enc.dither) * enc.norm.std).array() +
        enc.norm.mean;
    // the residual is sigma_k * eps_k, so normalize back by sigma
    err_sq += ((recon - dw) / enc.norm.std).squaredNorm() / dim;
  }
  CHECK(err_sq / trials ==
        doctest::Approx(lat.second_moment()).epsilon(0.02));
}

TEST_CASE("pad_to zero-pads and rejects shrinking") {
  Eigen::VectorXd v(3);
  v << 1.0, 2.0, 3.0;
  const Eigen::VectorXd p = pad_to(v, 4);
  CHECK(p.size() == 4);
  CHECK(p[3] == 0.0);
  CHECK(p.head(3) == v);
  CHECK_THROWS_AS(pad_to(p, 3), std::invalid_argument);
}

TEST_CASE("encode rejects unpadded input") {
  const Lattice lat = paper_lattice(4);
  StreamRng dith(17, "bad");
  CHECK_THROWS_AS(encode(lat, Eigen::VectorXd::Zero(3), 1.0, dith),
                  std::invalid_argument);
  CHECK_THROWS_AS(encode(lat, Eigen::VectorXd::Zero(4), -1.0, dith),
                  std::invalid_argument);
}
