#include "fedcpu/fl.hpp"

#include <stdexcept>

namespace fedcpu {

Eigen::VectorXd local_update(const Mlp& model, const Dataset& data,
                             const std::vector<int>& shard,
                             const TrainConfig& cfg, StreamRng& rng) {
  if (shard.empty()) {
    throw std::invalid_argument("local_update: empty device shard");
  }
  const int batch = std::min<int>(cfg.batch_size, static_cast<int>(shard.size()));
  const bool replace = static_cast<int>(shard.size()) < cfg.batch_size;

  Mlp local = model;
  Eigen::MatrixXd X(data.feature_dim(), batch);
  Eigen::VectorXi y(batch);
  Eigen::VectorXd grad;
  std::vector<int> order;

  for (int step = 0; step < cfg.local_epochs; ++step) {
    if (replace) {
      for (int i = 0; i < batch; ++i) {
        const int idx = shard[rng.below(shard.size())];
        X.col(i) = data.features.col(idx);
        y[i] = data.labels[idx];
      }
    } else {
      // partial Fisher-Yates: batch distinct samples
      order.resize(shard.size());
      for (std::size_t i = 0; i < shard.size(); ++i) order[i] = shard[i];
      for (int i = 0; i < batch; ++i) {
        const auto j = i + rng.below(order.size() - i);
        std::swap(order[i], order[j]);
        X.col(i) = data.features.col(order[i]);
        y[i] = data.labels[order[i]];
      }
    }
    local.loss_and_grad(X, y, grad);
    local.params() -= cfg.learning_rate * grad;
  }
  return local.params() - model.params();
}

Eigen::VectorXd ideal_aggregate(const std::vector<Eigen::VectorXd>& updates) {
  if (updates.empty()) {
    throw std::invalid_argument("ideal_aggregate: no updates");
  }
  Eigen::VectorXd sum = updates.front();
  for (std::size_t k = 1; k < updates.size(); ++k) {
    if (updates[k].size() != sum.size()) {
      throw std::invalid_argument("ideal_aggregate: update length mismatch");
    }
    sum += updates[k];
  }
  return sum / static_cast<double>(updates.size());
}

Eigen::VectorXd orthogonal_quantized_aggregate(
    const Lattice& lat, const std::vector<Eigen::VectorXd>& updates,
    const RngFactory& streams, int round) {
  if (updates.empty()) {
    throw std::invalid_argument("orthogonal_quantized_aggregate: no updates");
  }
  const int dim = static_cast<int>(updates.front().size());
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  for (std::size_t k = 0; k < updates.size(); ++k) {
    auto rng = streams.stream("dither", k, static_cast<std::uint64_t>(round));
    const Eigen::VectorXd padded = pad_to(updates[k], lat.dimension());
    const EncodedUpdate enc = encode(lat, padded, 1.0, rng);
    // degenerate (constant) updates reconstruct as their mean
    Eigen::VectorXd recon =
        (enc.lattice_point.coords - enc.dither) * enc.norm.std;
    recon.array() += enc.norm.mean;
    sum += recon.head(dim);
  }
  return sum / static_cast<double>(updates.size());
}

std::optional<OtaRoundResult> over_the_air_round(
    const Lattice& lat, const ChannelRealization& ch,
    const std::vector<Eigen::VectorXd>& updates, double power,
    bool adaptive_weights, const RngFactory& streams, int round) {
  const int K = static_cast<int>(updates.size());
  if (K == 0 || ch.devices() != K) {
    throw std::invalid_argument("over_the_air_round: channel/update count mismatch");
  }
  const int dim = static_cast<int>(updates.front().size());
  const int s = lat.dimension();

  // device side
  std::vector<EncodedUpdate> encoded;
  encoded.reserve(K);
  Eigen::MatrixXd X(K, s);
  for (int k = 0; k < K; ++k) {
    auto rng = streams.stream("dither", k, static_cast<std::uint64_t>(round));
    encoded.push_back(encode(lat, pad_to(updates[k], s), power, rng));
    X.row(k) = encoded.back().signal.transpose();
  }

  auto noise_rng = streams.stream("noise", static_cast<std::uint64_t>(round));
  const Eigen::MatrixXd Y = transmit(ch, X, noise_rng);

  // server side: (theta_k, sigma_k) arrive error-free; dithers are
  // re-derived from the shared streams, never read from the devices.
  Eigen::VectorXd sigmas(K);
  std::vector<NormalizationParams> norms(K);
  std::vector<Eigen::VectorXd> dithers(K);
  for (int k = 0; k < K; ++k) {
    norms[k] = encoded[k].norm;
    sigmas[k] = encoded[k].norm.std;
    auto rng = streams.stream("dither", k, static_cast<std::uint64_t>(round));
    dithers[k] = lat.sample_dither(rng);
  }

  OtaRoundResult result;
  try {
    result.plan = make_plan(ch.real_stacked, ch.snr, sigmas, lat.second_moment(),
                            /*force_all_ones=*/!adaptive_weights);
  } catch (const DegenerateRoundError&) {
    return std::nullopt;
  }
  result.aggregate = aggregate(lat, Y, result.plan, dithers, norms, power, dim);

  // ground truth, available only in simulation
  IntVec target = IntVec::Zero(s);
  for (int k = 0; k < K; ++k) {
    target += result.plan.a.a[k] * encoded[k].lattice_point.integer_rep;
  }
  const LatticePoint decoded =
      decode_combination(lat, Y, result.plan.b, lat.second_moment(), power);
  result.decode_success = (decoded.integer_rep == target);

  Eigen::VectorXd weighted = Eigen::VectorXd::Zero(dim);
  for (int k = 0; k < K; ++k) {
    weighted += static_cast<double>(result.plan.a.a[k]) * updates[k];
  }
  result.weighted_target = weighted / static_cast<double>(result.plan.a.sum());
  return result;
}

}  // namespace fedcpu
