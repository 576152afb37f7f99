#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace bsad {

// mt19937_64 output is fully specified by the standard; the helpers below avoid the
// implementation-defined std distributions so seeded runs are identical across toolchains.
using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, n).
inline int uniform_index(Rng& rng, int n) {
  return static_cast<int>((static_cast<unsigned __int128>(rng()) * static_cast<unsigned>(n)) >> 64);
}

/// Inverse-CDF draw from a probability row. Never returns an index with zero mass.
template <typename Derived>
int sample_categorical(const Eigen::DenseBase<Derived>& probs, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  int last = -1;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    const double p = probs(i);
    if (p <= 0.0) continue;
    acc += p;
    last = static_cast<int>(i);
    if (u < acc) return last;
  }
  return last;
}

/// splitmix64 finalizer; derives independent stream seeds from one run seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace bsad
