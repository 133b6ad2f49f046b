#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <numbers>

#include "fedcpu/channel.hpp"
#include "fedcpu/lattice.hpp"
#include "fedcpu/receiver.hpp"
#include "fedcpu/transceiver.hpp"

using namespace fedcpu;

namespace {

const Eigen::Matrix2d kBlock{{0.25, 0.0}, {0.125, 0.25}};

Lattice make_lattice(int dim) {
  return Lattice::with_second_moment(kBlock, 1.0, dim, 0.0050457);
}

Eigen::VectorXd random_vector(int n, StreamRng& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

void BM_Quantize(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const Lattice lat = make_lattice(dim);
  StreamRng rng(1, "bench-quantize");
  const Eigen::VectorXd x = random_vector(dim, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lat.quantize(x));
  }
  state.SetItemsProcessed(state.iterations() * dim / 2);
}
BENCHMARK(BM_Quantize)->Arg(256)->Arg(2048)->Arg(25450 + 2);

void BM_SampleDither(benchmark::State& state) {
  const Lattice lat = make_lattice(static_cast<int>(state.range(0)));
  StreamRng rng(2, "bench-dither");
  for (auto _ : state) {
    benchmark::DoNotOptimize(lat.sample_dither(rng));
  }
}
BENCHMARK(BM_SampleDither)->Arg(2048);

void BM_Encode(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const Lattice lat = make_lattice(dim);
  StreamRng data(3, "bench-encode-data");
  const Eigen::VectorXd dw = random_vector(dim, data);
  StreamRng dith(3, "bench-encode-dither");
  for (auto _ : state) {
    benchmark::DoNotOptimize(encode(lat, dw, 1.0, dith));
  }
}
BENCHMARK(BM_Encode)->Arg(2048);

void BM_OptimalB(benchmark::State& state) {
  const int M = static_cast<int>(state.range(0));
  const int K = M;
  StreamRng rng(4, "bench-b");
  const ChannelRealization ch = draw_channel(M, K, 5.0, 10.0, 1.0, rng);
  CoefficientVector a;
  a.a = IntVec::Ones(K);
  for (auto _ : state) {
    benchmark::DoNotOptimize(optimal_b(ch.real_stacked, ch.snr, a));
  }
}
BENCHMARK(BM_OptimalB)->Arg(10)->Arg(30);

void BM_SelectCoefficients(benchmark::State& state) {
  const int M = static_cast<int>(state.range(0));
  const int K = M;
  StreamRng rng(5, "bench-select");
  const ChannelRealization ch = draw_channel(M, K, 5.0, 10.0, 1.0, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(select_coefficients(ch.real_stacked, ch.snr));
  }
}
BENCHMARK(BM_SelectCoefficients)->Arg(10)->Arg(30);

void BM_Transmit(benchmark::State& state) {
  const int M = 10, K = 10;
  const int s = static_cast<int>(state.range(0));
  StreamRng rng(6, "bench-transmit");
  const ChannelRealization ch = draw_channel(M, K, 5.0, 10.0, 1.0, rng);
  Eigen::MatrixXd X(K, s);
  for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
  StreamRng noise(6, "bench-noise");
  for (auto _ : state) {
    benchmark::DoNotOptimize(transmit(ch, X, noise));
  }
}
BENCHMARK(BM_Transmit)->Arg(2048);

void BM_DecodeCombination(benchmark::State& state) {
  const int s = static_cast<int>(state.range(0));
  const int M = 10;
  const Lattice lat = make_lattice(s);
  StreamRng rng(7, "bench-decode");
  Eigen::MatrixXd Y(2 * M, s);
  for (int i = 0; i < Y.size(); ++i) Y.data()[i] = rng.normal();
  const Eigen::VectorXd b = random_vector(2 * M, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(decode_combination(lat, Y, b, 0.005, 1.0));
  }
}
BENCHMARK(BM_DecodeCombination)->Arg(2048);

}  // namespace

BENCHMARK_MAIN();
