#pragma once

#include <complex>
#include <cstdint>

namespace nlprecode::rng {

// Counter-based generator (SplitMix64). Output i depends only on (state0, i),
// so streams can be split per sample / per batch and regenerated bit-for-bit
// on any platform. std:: distributions are implementation-defined and are not
// used anywhere.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in (0, 1]: never returns 0 so log() in Box-Muller is safe.
  double next_unit() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Marsaglia-free Box-Muller pair, N(0,1) each.
  void next_gauss_pair(double& g0, double& g1);

  double next_gauss() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double g0, g1;
    next_gauss_pair(g0, g1);
    spare_ = g1;
    have_spare_ = true;
    return g0;
  }

  // CN(0,1): real/imag parts independent N(0, 1/2).
  std::complex<double> next_cgauss() {
    double g0, g1;
    next_gauss_pair(g0, g1);
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    return {g0 * inv_sqrt2, g1 * inv_sqrt2};
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Stream split: independent child seed for (seed, stream index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace nlprecode::rng
