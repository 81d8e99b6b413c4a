#include "nlprecode/rng.hpp"

#include <cmath>

namespace nlprecode::rng {

void SplitMix64::next_gauss_pair(double& g0, double& g1) {
  const double u1 = next_unit();
  const double u2 = next_unit();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  g0 = r * std::cos(a);
  g1 = r * std::sin(a);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // One extra mix round keeps child streams decorrelated from the parent
  // sequence even for adjacent stream indices.
  SplitMix64 g(seed ^ (0x9e3779b97f4a7c15ull * (stream + 1)));
  return g.next_u64();
}

}  // namespace nlprecode::rng
