#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fedcpu/channel.hpp"
#include "fedcpu/receiver.hpp"
#include "oracles.hpp"

using namespace fedcpu;

namespace {

const Eigen::Matrix2d kPaperBlock{{0.25, 0.0}, {0.125, 0.25}};

Lattice paper_lattice(int dim, double rho = 1.0) {
  return Lattice::with_second_moment(kPaperBlock, rho, dim,
                                     rho * rho * oracles::kGoldenSecondMoment);
}

CoefficientVector coeff(std::initializer_list<std::int64_t> vals) {
  CoefficientVector c;
  c.a.resize(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (auto v : vals) c.a[i++] = v;
  return c;
}

CoefficientVector random_coeff(int K, StreamRng& rng, std::int64_t lo = 1,
                               std::int64_t hi = 4) {
  CoefficientVector c;
  c.a.resize(K);
  for (int k = 0; k < K; ++k) c.a[k] = lo + std::int64_t(rng.below(hi - lo + 1));
  return c;
}

// Eq.-(8)-style decoding MSE with the optimal equalizer, through the
// explicit projection form rather than the Woodbury form the library uses.
double dmse_via_projection(const Eigen::MatrixXd& H, double snr,
                           const CoefficientVector& a, double sigma_q2) {
  Eigen::MatrixXd A = H * H.transpose();
  A.diagonal().array() += 1.0 / snr;
  const Eigen::VectorXd ad = a.a.cast<double>();
  const Eigen::VectorXd solved = Eigen::LLT<Eigen::MatrixXd>(A).solve(H * ad);
  return (1.0 + 2.0 * sigma_q2) *
         (ad.squaredNorm() - ad.dot(H.transpose() * solved));
}

}  // namespace

TEST_CASE("scalar channel equalizer closed form") {
  const double h = 0.7, snr = 10.0;
  Eigen::MatrixXd H(2, 1);
  H << h, 0.0;
  const Eigen::VectorXd b = optimal_b(H, snr, coeff({1}));
  CHECK(b[0] == doctest::Approx(h / (1.0 / snr + h * h)).epsilon(1e-12));
  CHECK(b[1] == doctest::Approx(0.0));
}

TEST_CASE("random perturbations never improve the equalizer") {
  StreamRng rng(30, "perturb");
  for (int inst = 0; inst < 20; ++inst) {
    const int K = 2 + int(rng.below(4));
    const int M = 1 + int(rng.below(4));
    const Eigen::MatrixXd H = oracles::random_stacked_channel(M, K, rng);
    const auto a = random_coeff(K, rng);
    const Eigen::VectorXd b = optimal_b(H, 10.0, a);
    const double base = decoding_mse_for_b(H, 10.0, a, 0.005, b);
    for (int p = 0; p < 100; ++p) {
      Eigen::VectorXd delta(b.size());
      for (int i = 0; i < delta.size(); ++i) delta[i] = rng.normal();
      delta *= 0.01 / delta.norm();
      REQUIRE(decoding_mse_for_b(H, 10.0, a, 0.005, b + delta) >= base - 1e-10);
    }
  }
}

TEST_CASE("zero-forcing limit for a square invertible channel") {
  StreamRng rng(31, "zf");
  const int M = 2;           // K = 2M = 4, stacked H is square
  const int K = 2 * M;
  const Eigen::MatrixXd H = oracles::random_stacked_channel(M, K, rng);
  REQUIRE(std::abs(H.determinant()) > 1e-9);
  const auto a = coeff({1, 2, 1, 3});
  const Eigen::VectorXd b = optimal_b(H, 1e12, a);
  CHECK((H.transpose() * b - a.a.cast<double>()).norm() < 1e-6);
}

TEST_CASE("gradient of the decoding objective vanishes at the optimum") {
  StreamRng rng(32, "stationary");
  for (int inst = 0; inst < 50; ++inst) {
    const int K = 1 + int(rng.below(6));
    const int M = 1 + int(rng.below(6));
    const Eigen::MatrixXd H = oracles::random_stacked_channel(M, K, rng);
    const auto a = random_coeff(K, rng);
    const Eigen::VectorXd b = optimal_b(H, 10.0, a);
    const Eigen::VectorXd grad = 2.0 * (H * H.transpose()) * b -
                                 2.0 * H * a.a.cast<double>() +
                                 (2.0 / 10.0) * b;
    REQUIRE(grad.norm() <= 1e-8);
  }
}

TEST_CASE("the two closed forms of the decoding MSE agree") {
  StreamRng rng(33, "mil");
  for (int inst = 0; inst < 100; ++inst) {
    const int K = 1 + int(rng.below(8));
    const int M = 1 + int(rng.below(8));
    const Eigen::MatrixXd H = oracles::random_stacked_channel(M, K, rng);
    const auto a = random_coeff(K, rng);
    const double sq = 0.01 * rng.uniform();
    const double lhs = decoding_mse(H, 10.0, a, sq);
    const double rhs = dmse_via_projection(H, 10.0, a, sq);
    REQUIRE(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("no signal path: decoding MSE collapses to the coefficient norm") {
  const Eigen::MatrixXd H = Eigen::MatrixXd::Zero(4, 3);
  const auto a = coeff({1, 2, 3});
  const double sq = 0.25;
  CHECK(decoding_mse(H, 10.0, a, sq) ==
        doctest::Approx((1.0 + 2.0 * sq) * 14.0).epsilon(1e-12));
}

TEST_CASE("decoding MSE matches its statistical definition at the optimum") {
  StreamRng rng(34, "dmse-mc");
  for (int inst = 0; inst < 2; ++inst) {
    const int K = 3, M = 2, s = 64;
    const double snr = 10.0, P = 1.0, sq = 0.005;
    const Eigen::MatrixXd H = oracles::random_stacked_channel(M, K, rng);
    const auto a = random_coeff(K, rng);
    const Eigen::VectorXd b = optimal_b(H, snr, a);
    const double predicted = decoding_mse(H, snr, a, sq);

    const double scale = std::sqrt((1.0 + 2.0 * sq) / P);
    const Eigen::VectorXd mismatch = H.transpose() * b - a.a.cast<double>();
    double acc = 0.0;
    const int trials = 5000;
    for (int t = 0; t < trials; ++t) {
      Eigen::MatrixXd X(K, s);
      for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.normal(0.0, std::sqrt(P));
      Eigen::MatrixXd Z(2 * M, s);
      for (int i = 0; i < Z.size(); ++i) {
        Z.data()[i] = rng.normal(0.0, std::sqrt(P / snr));
      }
      const Eigen::VectorXd noise =
          scale * (X.transpose() * mismatch + Z.transpose() * b);
      acc += noise.squaredNorm() / s;
    }
    CHECK(acc / trials == doctest::Approx(predicted).epsilon(0.03));
  }
}

TEST_CASE("coefficient selection") {
  SUBCASE("vanishing SNR gives the all-ones vector") {
    StreamRng rng(35, "lowsnr");
    const Eigen::MatrixXd H = oracles::random_stacked_channel(2, 3, rng);
    const auto sel = select_coefficients(H, 1e-9);
    CHECK(sel.converged);
    CHECK(sel.a.a == IntVec::Ones(3));
  }

  SUBCASE("aligned-gain fixture recovers the exhaustive optimum (1,2)") {
    Eigen::MatrixXd H(2, 2);
    H << 0.6, 1.23,
         0.0, 0.0;
    const auto sel = select_coefficients(H, 10.0);
    REQUIRE(sel.a.a.size() == 2);
    CHECK(sel.a.a[0] == 1);
    CHECK(sel.a.a[1] == 2);

    // exhaustive a >= 1 search agrees
    double best = std::numeric_limits<double>::infinity();
    IntVec best_a(2);
    for (std::int64_t i = 1; i <= 8; ++i) {
      for (std::int64_t j = 1; j <= 8; ++j) {
        CoefficientVector c;
        c.a.resize(2);
        c.a << i, j;
        const double v = decoding_mse(H, 10.0, c, 0.0);
        if (v < best) {
          best = v;
          best_a = c.a;
        }
      }
    }
    CHECK(sel.a.a == best_a);
  }

  SUBCASE("output always satisfies the constraints") {
    StreamRng rng(36, "sel-prop");
    for (int inst = 0; inst < 50; ++inst) {
      const int K = 2 + int(rng.below(6));
      const int M = 1 + int(rng.below(6));
      const Eigen::MatrixXd H = oracles::random_stacked_channel(M, K, rng);
      const auto sel = select_coefficients(H, 10.0);
      REQUIRE(sel.a.valid());
      REQUIRE((sel.a.a.array() >= 1).all());
    }
  }
}

TEST_CASE("noiseless single-device decode returns the transmitted point") {
  const int s = 32;
  const Lattice lat = paper_lattice(s);
  Eigen::MatrixXcd hc = Eigen::MatrixXcd::Constant(1, 1, 1.0);
  auto ch = make_channel(hc, 10.0, 1.0);
  ch.noise_var = 0.0;

  StreamRng data_rng(37, "decode1");
  Eigen::VectorXd dw(s);
  for (int i = 0; i < s; ++i) dw[i] = data_rng.normal();
  StreamRng dith(37, "dither");
  const EncodedUpdate enc = encode(lat, dw, 1.0, dith);

  Eigen::MatrixXd X(1, s);
  X.row(0) = enc.signal.transpose();
  StreamRng noise(37, "noise");
  const Eigen::MatrixXd Y = transmit(ch, X, noise);

  Eigen::VectorXd b(2);
  b << 1.0, 0.0;  // b^T H = 1 exactly
  const LatticePoint decoded =
      decode_combination(lat, Y, b, lat.second_moment(), 1.0);
  CHECK(decoded.integer_rep == enc.lattice_point.integer_rep);
}

TEST_CASE("lattice-point linearity over an identity-like channel") {
  const int s = 16;
  const Lattice lat = paper_lattice(s);
  // device 1 on the real branch, device 2 on the imaginary branch
  Eigen::MatrixXcd hc(1, 2);
  hc << std::complex<double>(1.0, 0.0), std::complex<double>(0.0, 1.0);
  auto ch = make_channel(hc, 10.0, 1.0);
  ch.noise_var = 0.0;

  StreamRng rng(38, "linear");
  IntVec s1(s), s2(s);
  for (int i = 0; i < s; ++i) {
    s1[i] = std::int64_t(rng.below(9)) - 4;
    s2[i] = std::int64_t(rng.below(9)) - 4;
  }
  const double gamma = std::sqrt(1.0 / (1.0 + 2.0 * lat.second_moment()));
  Eigen::MatrixXd X(2, s);
  X.row(0) = gamma * lat.coords_of(s1).transpose();
  X.row(1) = gamma * lat.coords_of(s2).transpose();
  StreamRng noise(38, "noise");
  const Eigen::MatrixXd Y = transmit(ch, X, noise);

  const auto a = coeff({2, 3});
  Eigen::VectorXd b(2);
  b << 2.0, 3.0;  // b^T H = a^T exactly for this channel
  const LatticePoint decoded =
      decode_combination(lat, Y, b, lat.second_moment(), 1.0);
  CHECK(decoded.integer_rep == (2 * s1 + 3 * s2).eval());
  (void)a;
}

TEST_CASE("optimal eta") {
  SUBCASE("equal sigmas, no quantization: eta = 1/sigma") {
    Eigen::VectorXd sig = Eigen::VectorXd::Constant(4, 0.3);
    CHECK(optimal_eta(coeff({1, 2, 1, 1}), sig, 0.0) ==
          doctest::Approx(1.0 / 0.3).epsilon(1e-12));
  }

  SUBCASE("first-order condition holds to 1e-12") {
    StreamRng rng(39, "eta-foc");
    for (int i = 0; i < 50; ++i) {
      const int K = 2 + int(rng.below(6));
      const auto a = random_coeff(K, rng);
      Eigen::VectorXd sig(K);
      for (int k = 0; k < K; ++k) sig[k] = 0.05 + rng.uniform();
      const double sq = 0.02 * rng.uniform();
      const double eta = optimal_eta(a, sig, sq);
      const Eigen::VectorXd ad = a.a.cast<double>();
      const double foc = (1.0 / eta) * (1.0 + sq) * ad.squaredNorm() -
                         ad.dot(sig.cwiseProduct(ad));
      REQUIRE(std::abs(foc) <= 1e-12 * ad.squaredNorm());
    }
  }

  SUBCASE("beats a log grid") {
    StreamRng rng(40, "eta-grid");
    for (int i = 0; i < 10; ++i) {
      const int K = 2 + int(rng.below(5));
      const auto a = random_coeff(K, rng);
      Eigen::VectorXd sig(K);
      for (int k = 0; k < K; ++k) sig[k] = 0.05 + rng.uniform();
      const double sq = 0.02 * rng.uniform();
      const double eta = optimal_eta(a, sig, sq);
      const double best = quantization_mse_at(a, sig, sq, eta);
      for (int g = 0; g < 1000; ++g) {
        const double e = eta * std::pow(100.0, rng.uniform(-1.0, 1.0));
        REQUIRE(quantization_mse_at(a, sig, sq, e) >= best - 1e-12);
      }
    }
  }

  SUBCASE("all-degenerate round throws") {
    Eigen::VectorXd sig = Eigen::VectorXd::Zero(3);
    CHECK_THROWS_AS(optimal_eta(coeff({1, 1, 1}), sig, 0.01),
                    DegenerateRoundError);
  }
}

TEST_CASE("quantization MSE") {
  SUBCASE("equal sigmas, no quantization: exactly zero") {
    Eigen::VectorXd sig = Eigen::VectorXd::Constant(3, 0.7);
    CHECK(quantization_mse(coeff({1, 2, 1}), sig, 0.0) ==
          doctest::Approx(0.0).epsilon(1e-15));
  }

  SUBCASE("closed form equals the general form at the optimal eta") {
    Eigen::VectorXd sig(2);
    sig << 1.0, 2.0;
    const auto a = coeff({1, 1});
    const double sq = 0.1;
    const double eta = optimal_eta(a, sig, sq);
    CHECK(quantization_mse(a, sig, sq) ==
          doctest::Approx(quantization_mse_at(a, sig, sq, eta)).epsilon(1e-12));
  }

  SUBCASE("degree-0 homogeneity in the coefficients") {
    StreamRng rng(41, "qmse-hom");
    for (int i = 0; i < 50; ++i) {
      const int K = 2 + int(rng.below(5));
      const auto a = random_coeff(K, rng);
      CoefficientVector doubled;
      doubled.a = 2 * a.a;
      Eigen::VectorXd sig(K);
      for (int k = 0; k < K; ++k) sig[k] = 0.05 + rng.uniform();
      const double sq = 0.02 * rng.uniform();
      REQUIRE(quantization_mse(doubled, sig, sq) ==
              doctest::Approx(quantization_mse(a, sig, sq)).epsilon(1e-12));
    }
  }
}

TEST_CASE("decoding MSE is monotone in SNR and antenna count") {
  StreamRng rng(42, "mono");

  SUBCASE("non-increasing in SNR") {
    for (int i = 0; i < 10; ++i) {
      const Eigen::MatrixXd H = oracles::random_stacked_channel(3, 4, rng);
      const auto a = random_coeff(4, rng);
      double prev = std::numeric_limits<double>::infinity();
      for (double snr = 0.1; snr <= 1000.0; snr *= 2.0) {
        const double v = decoding_mse(H, snr, a, 0.005);
        REQUIRE(v <= prev + 1e-12);
        prev = v;
      }
    }
  }

  SUBCASE("non-increasing as antennas are appended") {
    for (int i = 0; i < 10; ++i) {
      const int Mmax = 6, K = 4;
      const Eigen::MatrixXd Hfull = oracles::random_stacked_channel(Mmax, K, rng);
      const auto a = random_coeff(K, rng);
      double prev = std::numeric_limits<double>::infinity();
      for (int m = 1; m <= Mmax; ++m) {
        Eigen::MatrixXd H(2 * m, K);
        H.topRows(m) = Hfull.topRows(m);
        H.bottomRows(m) = Hfull.middleRows(Mmax, m);
        const double v = decoding_mse(H, 10.0, a, 0.005);
        REQUIRE(v <= prev + 1e-12);
        prev = v;
      }
    }
  }
}

namespace {

// Clean-channel fixture: two devices on the real/imaginary branches so that
// b^T H = a^T holds exactly, no noise.
struct CleanFixture {
  Lattice lat;
  ChannelRealization ch;
  std::vector<Eigen::VectorXd> updates;
  std::vector<EncodedUpdate> encoded;
  Eigen::MatrixXd Y;
  std::vector<Eigen::VectorXd> dithers;
  std::vector<NormalizationParams> norms;

  CleanFixture(int s, double rho, const CoefficientVector& a,
               std::uint64_t seed, bool equalize_sigmas)
      : lat(paper_lattice(s, rho)) {
    Eigen::MatrixXcd hc(1, 2);
    hc << std::complex<double>(1.0, 0.0), std::complex<double>(0.0, 1.0);
    ch = make_channel(hc, 10.0, 1.0);
    ch.noise_var = 0.0;

    StreamRng data(seed, "fixture-data");
    Eigen::VectorXd u1(s), u2(s);
    for (int i = 0; i < s; ++i) {
      u1[i] = data.normal(0.2, 0.8);
      u2[i] = data.normal(-0.1, equalize_sigmas ? 0.8 : 1.7);
    }
    if (equalize_sigmas) {
      // force identical population stds
      auto [n1, p1] = normalize(u1);
      auto [n2, p2] = normalize(u2);
      u1 = n1 * 0.8;
      u2 = (n2 * 0.8).array() - 0.1;
      (void)p1;
      (void)p2;
    }
    updates = {u1, u2};

    const RngFactory streams{seed};
    Eigen::MatrixXd X(2, s);
    for (int k = 0; k < 2; ++k) {
      auto rng = streams.stream("dither", k, 0);
      encoded.push_back(encode(lat, updates[k], 1.0, rng));
      X.row(k) = encoded[k].signal.transpose();
      dithers.push_back(encoded[k].dither);
      norms.push_back(encoded[k].norm);
    }
    StreamRng noise(seed, "noise");
    Y = transmit(ch, X, noise);
    (void)a;
  }

  ReceiverPlan plan_for(const CoefficientVector& a) const {
    ReceiverPlan plan;
    plan.a = a;
    plan.b.resize(2);
    plan.b << double(a.a[0]), double(a.a[1]);  // b^T H = a^T exactly
    Eigen::VectorXd sig(2);
    sig << norms[0].std, norms[1].std;
    plan.eta = optimal_eta(a, sig, lat.second_moment());
    plan.dmse = decoding_mse(ch.real_stacked, ch.snr, a, lat.second_moment());
    plan.qmse = quantization_mse(a, sig, lat.second_moment());
    return plan;
  }
};

}  // namespace

TEST_CASE("clean-channel aggregation recovers the weighted average") {
  const auto a = coeff({1, 2});
  CleanFixture fx(256, 1e-6, a, 43, /*equalize_sigmas=*/true);
  const auto plan = fx.plan_for(a);
  const Eigen::VectorXd agg =
      aggregate(fx.lat, fx.Y, plan, fx.dithers, fx.norms, 1.0, 256);
  const Eigen::VectorXd target = (fx.updates[0] + 2.0 * fx.updates[1]) / 3.0;
  CHECK((agg - target).norm() / target.norm() < 1e-3);
}

TEST_CASE("clean-channel aggregation is invariant under doubling a") {
  const auto a = coeff({1, 2});
  const auto a2 = coeff({2, 4});
  CleanFixture fx(64, 1.0, a, 44, /*equalize_sigmas=*/false);
  const auto agg1 = aggregate(fx.lat, fx.Y, fx.plan_for(a), fx.dithers,
                              fx.norms, 1.0, 64);
  const auto agg2 = aggregate(fx.lat, fx.Y, fx.plan_for(a2), fx.dithers,
                              fx.norms, 1.0, 64);
  CHECK((agg1 - agg2).norm() <= 1e-12 * agg1.norm());
}

TEST_CASE("one-hot coefficients reduce to the single-device round trip") {
  const auto a = coeff({0, 1});
  const int s = 4096;
  double err_sq = 0.0;
  double expected = 0.0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    CleanFixture fx(s, 1.0, a, 45 + t, /*equalize_sigmas=*/false);
    const auto plan = fx.plan_for(a);
    const Eigen::VectorXd agg =
        aggregate(fx.lat, fx.Y, plan, fx.dithers, fx.norms, 1.0, s);
    err_sq += (agg - fx.updates[1]).squaredNorm() / s;
    const double sig = fx.norms[1].std;
    const double sq = fx.lat.second_moment();
    // residual of the single-device reconstruction at eta_opt
    expected += sig * sig * sq / (1.0 + sq);
  }
  CHECK(err_sq / trials == doctest::Approx(expected / trials).epsilon(0.10));
}

TEST_CASE("aggregate validates its inputs") {
  const auto a = coeff({1, 1});
  CleanFixture fx(16, 1.0, a, 46, true);
  const auto plan = fx.plan_for(a);
  CHECK_THROWS_AS(aggregate(fx.lat, fx.Y, plan, {fx.dithers[0]}, fx.norms, 1.0, 16),
                  std::invalid_argument);
  CHECK_THROWS_AS(aggregate(fx.lat, fx.Y, plan, fx.dithers, fx.norms, 1.0, 99),
                  std::invalid_argument);
}
