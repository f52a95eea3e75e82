#include "qadapt/rng.hpp"

namespace qadapt {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t run, std::uint64_t stream) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s = a ^ (run * 0xD1B54A32D192ED03ULL);
  std::uint64_t b = splitmix64(s);
  s = b ^ (stream * 0x8CB92BA72F3D8DD7ULL);
  return splitmix64(s);
}

Vec Rng::normal_vector(int n) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = normal();
  return v;
}

Vec Rng::gaussian(const Mat& cov) { return covariance_factor(cov) * normal_vector(static_cast<int>(cov.rows())); }

}  // namespace qadapt
