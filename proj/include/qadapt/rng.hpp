#pragma once

#include <cstdint>
#include <random>

#include "qadapt/linalg.hpp"

namespace qadapt {

/// One SplitMix64 step: advances `state` and returns the mixed output.
std::uint64_t splitmix64(std::uint64_t& state);

/// Independent seed for (campaign seed, run index, stream id). Runs and
/// streams never share generator state, so results do not depend on how runs
/// are scheduled across threads.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t run, std::uint64_t stream);

/// Named random streams so every technique sees the same draws for a run.
enum class Stream : std::uint64_t {
  kProcessNoise = 1,
  kMeasurementNoise = 2,
  kInitialError = 3,
  kManeuverError = 4,
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::uint64_t run, Stream stream)
      : engine_(derive_seed(seed, run, static_cast<std::uint64_t>(stream))) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  Vec normal_vector(int n);
  /// Sample from N(0, cov) through the covariance factor.
  Vec gaussian(const Mat& cov);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace qadapt
