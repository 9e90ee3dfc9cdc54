#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cempid {

/// Purpose tags keep RNG streams for different consumers disjoint.
enum class StreamPurpose : std::uint64_t {
  kBasis = 1,
  kPopulation = 2,
  kEpisode = 3,
  kInitPose = 4,
  kSensorNoise = 5,
  kActuatorNoise = 6,
  kPolicySampling = 7,
  kSelfTest = 8,
};

/// Mixes a master seed with a purpose tag and an arbitrary index path into a
/// 64-bit stream seed (splitmix64 finalizer chained over the inputs).
std::uint64_t derive_seed(std::uint64_t master, StreamPurpose purpose,
                          std::initializer_list<std::uint64_t> path = {});

/// Exclusively owned random stream. Not thread-safe; copy or derive one per
/// consumer instead of sharing.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  RngStream(std::uint64_t master, StreamPurpose purpose,
            std::initializer_list<std::uint64_t> path = {})
      : engine_(derive_seed(master, purpose, path)) {}

  double normal() { return normal_(engine_); }
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * unit_(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

}  // namespace cempid
