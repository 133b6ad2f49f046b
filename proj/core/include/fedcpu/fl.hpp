#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "fedcpu/channel.hpp"
#include "fedcpu/dataset.hpp"
#include "fedcpu/lattice.hpp"
#include "fedcpu/mlp.hpp"
#include "fedcpu/receiver.hpp"
#include "fedcpu/rng.hpp"

namespace fedcpu {

struct TrainConfig {
  int local_epochs = 3;        // SGD steps per round, one mini-batch each
  double learning_rate = 0.01;
  int batch_size = 100;
  int rounds = 30;
  int devices = 10;
};

/// tau SGD steps on the device shard; mini-batches of batch_size drawn from
/// the shard (with replacement when the shard is smaller). Returns the model
/// delta w_after - w_before.
Eigen::VectorXd local_update(const Mlp& model, const Dataset& data,
                             const std::vector<int>& shard,
                             const TrainConfig& cfg, StreamRng& rng);

/// Error-free baseline: plain arithmetic mean of the updates.
Eigen::VectorXd ideal_aggregate(const std::vector<Eigen::VectorXd>& updates);

/// Orthogonal-transmission quantized baseline: per device normalize, dither,
/// quantize, de-dither, de-normalize (no channel), then average.
/// The dither stream for device k and round `round` is
/// streams.stream("dither", k, round).
Eigen::VectorXd orthogonal_quantized_aggregate(
    const Lattice& lat, const std::vector<Eigen::VectorXd>& updates,
    const RngFactory& streams, int round);

/// One over-the-air round: encode all devices, cross the channel, run the
/// two-layer receiver. adaptive_weights=false forces a = all-ones (the blind
/// equal-weight baseline). Returns std::nullopt on a degenerate round (all
/// selected devices reported zero std).
struct OtaRoundResult {
  Eigen::VectorXd aggregate;  // length = original update dimension
  ReceiverPlan plan;
  bool decode_success = false;
  /// the target the receiver aims for: (1/1^T a) sum a_k dw_k
  Eigen::VectorXd weighted_target;
};

std::optional<OtaRoundResult> over_the_air_round(
    const Lattice& lat, const ChannelRealization& ch,
    const std::vector<Eigen::VectorXd>& updates, double power,
    bool adaptive_weights, const RngFactory& streams, int round);

}  // namespace fedcpu
