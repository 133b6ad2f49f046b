#include "fedcpu/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "fedcpu/channel.hpp"
#include "fedcpu/receiver.hpp"
#include "fedcpu/transceiver.hpp"

namespace fedcpu {

Scheme scheme_from_string(const std::string& name) {
  if (name == "fedcpu") return Scheme::kFedCpu;
  if (name == "ideal") return Scheme::kIdeal;
  if (name == "orthogonal_quantized") return Scheme::kOrthogonalQuantized;
  if (name == "blind_equal") return Scheme::kBlindEqual;
  throw std::invalid_argument("unknown scheme '" + name + "'");
}

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::kFedCpu: return "fedcpu";
    case Scheme::kIdeal: return "ideal";
    case Scheme::kOrthogonalQuantized: return "orthogonal_quantized";
    case Scheme::kBlindEqual: return "blind_equal";
  }
  throw std::logic_error("unreachable");
}

namespace {

int padded_dim(int d) { return d % 2 == 0 ? d : d + 1; }

Lattice build_lattice(const ExperimentConfig& cfg, int model_dim) {
  StreamRng rng(cfg.lattice_seed, "lattice-mc");
  return Lattice::create(cfg.generator, cfg.rho, padded_dim(model_dim),
                         cfg.second_moment_samples, rng);
}

}  // namespace

ExperimentSession::ExperimentSession(const ExperimentConfig& cfg)
    : cfg_(cfg),
      train_([&] {
        cfg.validate();
        if (cfg.dataset_kind == "mnist") {
          return load_idx(cfg.train_images, cfg.train_labels, cfg.train_samples);
        }
        StreamRng rng(cfg.data_seed, "dataset", 0);
        return synthetic_blobs(cfg.train_samples, cfg.input_dim, cfg.classes,
                               cfg.blob_noise, rng);
      }()),
      test_([&] {
        if (cfg.dataset_kind == "mnist") {
          return load_idx(cfg.test_images, cfg.test_labels, cfg.test_samples);
        }
        StreamRng rng(cfg.data_seed, "dataset", 1);
        return synthetic_blobs(cfg.test_samples, cfg.input_dim, cfg.classes,
                               cfg.blob_noise, rng);
      }()),
      shape_{train_.feature_dim(), cfg.hidden_units,
             std::max(train_.classes, test_.classes)},
      lattice_(build_lattice(cfg, shape_.param_count())) {
  if (!cfg_.channel_csv.empty()) {
    fixed_channel_ = load_channel_csv(cfg_.channel_csv);
    if (fixed_channel_->rows() != cfg_.antennas ||
        fixed_channel_->cols() != cfg_.devices) {
      throw ConfigError(0, "channel.channel_csv shape does not match antennas x devices");
    }
  }
}

std::vector<RoundMetrics> ExperimentSession::run(Scheme scheme,
                                                 std::uint64_t seed) const {
  const RngFactory streams{seed};
  const int K = cfg_.devices;
  const int d = model_dim();

  auto partition_rng = streams.stream("partition");
  const DevicePartition part = partition_non_iid(
      train_, K, cfg_.classes_per_device, cfg_.dirichlet_alpha, partition_rng);

  auto init_rng = streams.stream("init");
  Mlp model = Mlp::init(shape_, init_rng);

  TrainConfig tc;
  tc.local_epochs = cfg_.local_epochs;
  tc.learning_rate = cfg_.learning_rate;
  tc.batch_size = cfg_.batch_size;
  tc.rounds = cfg_.rounds;
  tc.devices = K;

  std::vector<RoundMetrics> rows;
  rows.reserve(cfg_.rounds);
  std::vector<Eigen::VectorXd> updates(K);

  for (int t = 0; t < cfg_.rounds; ++t) {
    const auto start = std::chrono::steady_clock::now();

    for (int k = 0; k < K; ++k) {
      if (part.shards[k].empty()) {
        std::cerr << "warning: device " << k << " has an empty shard, skipped\n";
        updates[k] = Eigen::VectorXd::Zero(d);
        continue;
      }
      auto sgd_rng = streams.stream("sgd", k, static_cast<std::uint64_t>(t));
      updates[k] = local_update(model, train_, part.shards[k], tc, sgd_rng);
    }

    RoundMetrics m;
    m.scheme = to_string(scheme);
    m.seed = seed;
    m.round = t;

    Eigen::VectorXd global_delta = Eigen::VectorXd::Zero(d);
    switch (scheme) {
      case Scheme::kIdeal: {
        global_delta = ideal_aggregate(updates);
        m.aggregate_error_norm = 0.0;
        break;
      }
      case Scheme::kOrthogonalQuantized: {
        global_delta = orthogonal_quantized_aggregate(lattice_, updates, streams, t);
        m.aggregate_error_norm = (global_delta - ideal_aggregate(updates)).norm();
        break;
      }
      case Scheme::kFedCpu:
      case Scheme::kBlindEqual: {
        auto channel_rng = streams.stream("channel", static_cast<std::uint64_t>(t));
        const ChannelRealization ch =
            fixed_channel_
                ? make_channel(*fixed_channel_, cfg_.snr, cfg_.power)
                : draw_channel(cfg_.antennas, K, cfg_.fading_rate, cfg_.snr,
                               cfg_.power, channel_rng);
        const auto result = over_the_air_round(
            lattice_, ch, updates, cfg_.power,
            /*adaptive_weights=*/scheme == Scheme::kFedCpu, streams, t);
        if (!result) {
          std::cerr << "warning: degenerate round " << t
                    << " (all selected devices constant), aggregation skipped\n";
          m.decode_success = 0;
          break;
        }
        global_delta = result->aggregate;
        m.dmse = result->plan.dmse;
        m.qmse = result->plan.qmse;
        m.decode_success = result->decode_success ? 1 : 0;
        m.aggregate_error_norm = (global_delta - result->weighted_target).norm();
        if (!result->plan.selection_converged) {
          std::cerr << "warning: coefficient selection hit the iteration cap "
                       "in round " << t << "\n";
        }
        break;
      }
    }

    model.params() += global_delta;
    m.test_accuracy = model.accuracy(test_.features, test_.labels);

    const auto stop = std::chrono::steady_clock::now();
    m.wall_time_ms =
        cfg_.omit_timing
            ? 0.0
            : std::chrono::duration<double, std::milli>(stop - start).count();
    rows.push_back(std::move(m));
  }
  return rows;
}

std::vector<RoundMetrics> run_experiment(const ExperimentConfig& cfg,
                                         Scheme scheme,
                                         const std::vector<std::uint64_t>& seeds) {
  const ExperimentSession session(cfg);
  std::vector<RoundMetrics> all;
  for (const auto seed : seeds) {
    auto rows = session.run(scheme, seed);
    all.insert(all.end(), rows.begin(), rows.end());
  }
  return all;
}

std::string run_to_files(const ExperimentConfig& cfg, const std::string& out_dir,
                         const std::string& command_line, std::ostream* log) {
  std::filesystem::create_directories(out_dir);
  const ExperimentSession session(cfg);
  std::vector<RoundMetrics> all;
  for (const auto& scheme_name : cfg.schemes) {
    const Scheme scheme = scheme_from_string(scheme_name);
    for (const auto seed : cfg.seeds) {
      if (log) {
        (*log) << "running " << scheme_name << " seed " << seed << "...\n";
      }
      auto rows = session.run(scheme, seed);
      all.insert(all.end(), rows.begin(), rows.end());
    }
  }
  const std::string csv = (std::filesystem::path(out_dir) / "metrics.csv").string();
  write_metrics_csv(csv, all);
  write_manifest((std::filesystem::path(out_dir) / "manifest.json").string(), cfg,
                 command_line);
  return csv;
}

std::string run_sweep(const ExperimentConfig& cfg, const std::string& param,
                      const std::vector<std::string>& values,
                      const std::string& out_dir, const std::string& command_line,
                      std::ostream* log) {
  if (param != "M" && param != "rho" && param != "scheme") {
    throw ConfigError(0, "sweep param must be one of M, rho, scheme");
  }
  if (values.empty()) throw ConfigError(0, "sweep needs at least one value");
  std::filesystem::create_directories(out_dir);

  std::vector<std::pair<std::string, std::vector<RoundMetrics>>> combined;
  for (const auto& value : values) {
    ExperimentConfig point = cfg;
    if (param == "M") {
      point.antennas = std::stoi(value);
      if (point.antennas < 1) throw ConfigError(0, "sweep M values must be >= 1");
    } else if (param == "rho") {
      point.rho = std::stod(value);
      if (point.rho <= 0) throw ConfigError(0, "sweep rho values must be > 0");
    } else {
      point.schemes = {value};
    }
    point.validate();

    const std::string sub =
        (std::filesystem::path(out_dir) / ("sweep_" + param + "_" + value)).string();
    if (log) (*log) << "sweep point " << param << " = " << value << "\n";
    run_to_files(point, sub, command_line, log);
    combined.emplace_back(
        value, read_metrics_csv(
                   (std::filesystem::path(sub) / "metrics.csv").string()));
  }

  const std::string combined_path =
      (std::filesystem::path(out_dir) / ("sweep_" + param + ".csv")).string();
  write_sweep_csv(combined_path, param, combined);
  return combined_path;
}

// ---------------------------------------------------------------------------
// validate: quick oracle suite
// ---------------------------------------------------------------------------

namespace {

struct Check {
  const char* name;
  bool ok;
};

Eigen::MatrixXd random_stacked_channel(int M, int K, StreamRng& rng) {
  Eigen::MatrixXcd hc(M, K);
  for (int m = 0; m < M; ++m) {
    for (int k = 0; k < K; ++k) {
      const double mag = std::sqrt(rng.exponential(5.0));
      const double ph = rng.uniform(0.0, 2.0 * std::numbers::pi);
      hc(m, k) = std::complex<double>(mag * std::cos(ph), mag * std::sin(ph));
    }
  }
  Eigen::MatrixXd H(2 * M, K);
  H.topRows(M) = hc.real();
  H.bottomRows(M) = hc.imag();
  return H;
}

// exhaustive CVP over a window, for cross-checking quantize
void brute_force_block(const Eigen::Matrix2d& G, double x0, double x1,
                       std::int64_t& s0, std::int64_t& s1, int radius) {
  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t i = -radius; i <= radius; ++i) {
    for (std::int64_t j = -radius; j <= radius; ++j) {
      const double p0 = G(0, 0) * double(i) + G(0, 1) * double(j);
      const double p1 = G(1, 0) * double(i) + G(1, 1) * double(j);
      const double d = (x0 - p0) * (x0 - p0) + (x1 - p1) * (x1 - p1);
      if (d < best) {
        best = d;
        s0 = i;
        s1 = j;
      }
    }
  }
}

}  // namespace

int run_validation(std::ostream& out) {
  std::vector<Check> checks;
  const Eigen::Matrix2d g2{{0.25, 0.0}, {0.125, 0.25}};

  // closed-form identity of the two decoding-MSE routes
  {
    StreamRng rng(11, "validate-dmse");
    bool ok = true;
    for (int i = 0; i < 20 && ok; ++i) {
      const int K = 2 + int(rng.below(8));
      const int M = 1 + int(rng.below(8));
      const Eigen::MatrixXd H = random_stacked_channel(M, K, rng);
      CoefficientVector a;
      a.a.resize(K);
      for (int k = 0; k < K; ++k) a.a[k] = 1 + std::int64_t(rng.below(4));
      const double direct = decoding_mse(H, 10.0, a, 0.005);
      const Eigen::MatrixXd inner = H * H.transpose();
      Eigen::MatrixXd A = inner;
      A.diagonal().array() += 1.0 / 10.0;
      const Eigen::VectorXd ad = a.a.cast<double>();
      const Eigen::VectorXd solved =
          Eigen::LLT<Eigen::MatrixXd>(A).solve(H * ad);
      const double woodbury =
          (1.0 + 2.0 * 0.005) * (ad.squaredNorm() - ad.dot(H.transpose() * solved));
      ok = std::abs(direct - woodbury) <= 1e-9 * std::max(1.0, std::abs(direct));
    }
    checks.push_back({"decoding-mse closed forms agree", ok});
  }

  // equalizer stationarity
  {
    StreamRng rng(12, "validate-b");
    bool ok = true;
    for (int i = 0; i < 20 && ok; ++i) {
      const int K = 2 + int(rng.below(6));
      const int M = 1 + int(rng.below(6));
      const Eigen::MatrixXd H = random_stacked_channel(M, K, rng);
      CoefficientVector a;
      a.a = IntVec::Ones(K);
      const Eigen::VectorXd b = optimal_b(H, 10.0, a);
      const Eigen::VectorXd grad = 2.0 * (H * H.transpose()) * b -
                                   2.0 * H * a.a.cast<double>() +
                                   (2.0 / 10.0) * b;
      ok = grad.norm() <= 1e-8;
    }
    checks.push_back({"equalizer gradient vanishes at the optimum", ok});
  }

  // normalizing-factor optimality on a log grid
  {
    StreamRng rng(13, "validate-eta");
    bool ok = true;
    for (int i = 0; i < 10 && ok; ++i) {
      const int K = 2 + int(rng.below(6));
      CoefficientVector a;
      a.a.resize(K);
      Eigen::VectorXd sig(K);
      for (int k = 0; k < K; ++k) {
        a.a[k] = 1 + std::int64_t(rng.below(4));
        sig[k] = 0.1 + rng.uniform();
      }
      const double sq = 0.01 * rng.uniform();
      const double eta = optimal_eta(a, sig, sq);
      const double best = quantization_mse_at(a, sig, sq, eta);
      for (int g = 0; g < 1000; ++g) {
        const double e = eta * std::pow(10.0, rng.uniform(-2.0, 2.0));
        if (quantization_mse_at(a, sig, sq, e) < best - 1e-12) {
          ok = false;
          break;
        }
      }
    }
    checks.push_back({"normalizing factor beats a log grid", ok});
  }

  // quantizer vs exhaustive search
  {
    StreamRng rng(14, "validate-cvp");
    const Lattice lat = Lattice::with_second_moment(g2, 1.0, 2, 0.0);
    bool ok = true;
    for (int i = 0; i < 500 && ok; ++i) {
      const double x0 = rng.normal(0.0, 2.0 * 0.25);
      const double x1 = rng.normal(0.0, 2.0 * 0.25);
      Eigen::VectorXd x(2);
      x << x0, x1;
      const LatticePoint p = lat.quantize(x);
      std::int64_t s0 = 0, s1 = 0;
      brute_force_block(lat.scaled_block(), x0, x1, s0, s1, 10);
      ok = (p.integer_rep[0] == s0 && p.integer_rep[1] == s1);
    }
    checks.push_back({"quantizer matches exhaustive nearest-point search", ok});
  }

  // dither statistics
  {
    StreamRng rng(15, "validate-dither");
    const Lattice lat = Lattice::with_second_moment(g2, 1.0, 2, 0.0);
    const int n = 100000;
    double sum0 = 0, sum1 = 0, sq = 0;
    bool folded = true;
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd d = lat.sample_dither(rng);
      sum0 += d[0];
      sum1 += d[1];
      sq += d.squaredNorm();
      if (i < 1000) {
        folded = folded && lat.quantize(d).integer_rep.isZero();
      }
    }
    const double second = sq / (2.0 * n);
    const bool mean_ok = std::abs(sum0 / n) < 5e-3 && std::abs(sum1 / n) < 5e-3;
    const bool moment_ok = std::abs(second - 0.0050457) / 0.0050457 < 0.05;
    checks.push_back({"dither is Voronoi-folded with the right moments",
                      folded && mean_ok && moment_ok});
  }

  int failures = 0;
  for (const auto& c : checks) {
    out << (c.ok ? "[PASS] " : "[FAIL] ") << c.name << "\n";
    if (!c.ok) ++failures;
  }
  return failures;
}

}  // namespace fedcpu
