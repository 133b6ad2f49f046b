#include "fedcpu/rng.hpp"

#include <cmath>
#include <numbers>

namespace fedcpu {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

StreamRng::StreamRng(std::uint64_t master_seed, std::string_view stream,
                     std::uint64_t id_a, std::uint64_t id_b) {
  std::uint64_t h = mix64(master_seed + kGolden);
  h = mix64(h ^ fnv1a(stream));
  h = mix64(h ^ (id_a + kGolden));
  h = mix64(h ^ (id_b + kGolden));
  state_ = h;
}

std::uint64_t StreamRng::next() {
  state_ += kGolden;
  return mix64(state_);
}

double StreamRng::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double StreamRng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double StreamRng::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  // u1 in (0, 1] so the log is finite
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_normal_ = true;
  return r * std::cos(theta);
}

double StreamRng::normal(double mean, double stddev) {
  return mean + stddev * normal();
}

double StreamRng::exponential(double rate) {
  return -std::log(1.0 - uniform()) / rate;
}

std::uint64_t StreamRng::below(std::uint64_t n) {
  // Lemire-style rejection-free enough for simulation use: 128-bit multiply
  // keeps the modulo bias at 2^-64.
  const unsigned __int128 wide =
      static_cast<unsigned __int128>(next()) * static_cast<unsigned __int128>(n);
  return static_cast<std::uint64_t>(wide >> 64);
}

}  // namespace fedcpu
