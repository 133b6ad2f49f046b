#pragma once

#include <cstdint>
#include <string_view>

namespace fedcpu {

/// Counter-based keyed random stream. Every subsystem draws from its own
/// named stream derived from (master seed, stream name, id_a, id_b), so
/// changing the draw count of one subsystem never perturbs another, and a
/// stream can be re-derived bit-exactly anywhere (the shared-dither
/// contract between devices and server relies on this).
///
/// The engine is SplitMix64: the state advances by a fixed odd constant and
/// the output is a bijective mix of the counter.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  StreamRng(std::uint64_t master_seed, std::string_view stream,
            std::uint64_t id_a = 0, std::uint64_t id_b = 0);

  result_type operator()() { return next(); }
  std::uint64_t next();

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller (pairs generated, one cached).
  double normal();
  double normal(double mean, double stddev);
  /// Exponential with the given rate (mean 1/rate).
  double exponential(double rate);
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

 private:
  std::uint64_t state_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// Fans a single master seed out to named streams.
struct RngFactory {
  std::uint64_t master_seed = 0;

  StreamRng stream(std::string_view name, std::uint64_t id_a = 0,
                   std::uint64_t id_b = 0) const {
    return StreamRng(master_seed, name, id_a, id_b);
  }
};

}  // namespace fedcpu
