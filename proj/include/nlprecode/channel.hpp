#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nlprecode/parallel.hpp"
#include "nlprecode/types.hpp"

namespace nlprecode::channel {

enum class Dist : std::uint8_t { rayleigh = 0, los = 1 };

// A set of i.i.d. channel realizations sharing (M, K). Regenerating with the
// recorded seed reproduces the samples bit-for-bit.
struct ChannelSet {
  int M = 0;
  int K = 0;
  std::uint64_t seed = 0;
  Dist dist = Dist::rayleigh;
  std::vector<CMat> samples;

  std::size_t size() const { return samples.size(); }
};

struct LosGeometry {
  std::vector<double> user_angles_deg;  // theta_k in [0, 180]
  std::vector<double> pathloss;         // beta_k >= 0, defaults to 1
  double spacing_over_wavelength = 0.5;
};

// Entries i.i.d. CN(0,1), rounded to complex64 so datasets round-trip
// bit-exactly through the file format. Sample i depends only on (seed, i).
ChannelSet gen_rayleigh(int M, int K, std::int64_t n, std::uint64_t seed,
                        par::Exec exec = par::Exec::openmp);

// Deterministic ULA line-of-sight channel:
// h[m][k] = sqrt(beta_k) * exp(-j * m * 2*pi * (d/lambda) * cos(theta_k)).
CMat gen_los(int M, const LosGeometry& geom);

void save_channels(const ChannelSet& set, const std::string& path);
ChannelSet load_channels(const std::string& path);

}  // namespace nlprecode::channel
