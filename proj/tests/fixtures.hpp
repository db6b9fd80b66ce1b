#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "collider/common.hpp"

namespace fixture {

// Clean points lie near a 2-d plane inside a 12-d space; the poisoned cluster
// is a compact full-dimensional blob lifted off that plane.
struct ManifoldWithCluster {
  collider::Matrix features;
  std::vector<bool> poisoned;
};

inline ManifoldWithCluster manifold_with_cluster(std::uint64_t seed, std::size_t clean = 300,
                                                 std::size_t dirty = 30) {
  constexpr std::size_t dim = 12;
  collider::Rng rng(seed);
  std::uniform_real_distribution<double> plane(-1.0, 1.0);
  std::normal_distribution<double> jitter(0.0, 0.01);
  std::normal_distribution<double> blob(0.0, 0.15);
  ManifoldWithCluster out{collider::Matrix(clean + dirty, dim), {}};
  for (std::size_t i = 0; i < clean; ++i) {
    out.features(i, 0) = plane(rng);
    out.features(i, 1) = plane(rng);
    for (std::size_t d = 2; d < dim; ++d) out.features(i, d) = jitter(rng);
    out.poisoned.push_back(false);
  }
  for (std::size_t i = clean; i < clean + dirty; ++i) {
    for (std::size_t d = 0; d < dim; ++d) out.features(i, d) = blob(rng);
    out.features(i, 2) += 0.8;
    out.poisoned.push_back(true);
  }
  return out;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace fixture
