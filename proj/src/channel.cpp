#include "nlprecode/channel.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

#include "nlprecode/rng.hpp"

namespace nlprecode::channel {

namespace {

// Round to the nearest float so that a generated set survives the complex64
// on-disk format without changing. The volatile store blocks gcc from
// eliding the narrowing cast under -O3 -march=native (observed with gcc 11 /
// AVX-512, where double->float->double folded to the identity).
inline double round_f32(double v) {
  volatile float f = static_cast<float>(v);
  return static_cast<double>(f);
}

inline cplx round_c64(cplx v) { return {round_f32(v.real()), round_f32(v.imag())}; }

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void put_bytes(std::FILE* f, const void* p, std::size_t n) {
  if (std::fwrite(p, 1, n, f) != n) fail(Errc::io_error, "short write");
}

void get_bytes(std::FILE* f, void* p, std::size_t n, Errc on_eof) {
  if (std::fread(p, 1, n, f) != n) fail(on_eof, "unexpected end of file");
}

template <class T>
void put_le(std::FILE* f, T v) {
  unsigned char b[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  put_bytes(f, b, sizeof(T));
}

template <class T>
T get_le(std::FILE* f, Errc on_eof) {
  unsigned char b[sizeof(T)];
  get_bytes(f, b, sizeof(T), on_eof);
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(b[i]) << (8 * i);
  return v;
}

void put_f32(std::FILE* f, float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  put_le<std::uint32_t>(f, u);
}

float get_f32(std::FILE* f) {
  std::uint32_t u = get_le<std::uint32_t>(f, Errc::io_error);
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

constexpr char kMagic[4] = {'M', 'M', 'C', '1'};
constexpr std::uint8_t kVersion = 1;

}  // namespace

ChannelSet gen_rayleigh(int M, int K, std::int64_t n, std::uint64_t seed, par::Exec exec) {
  require(M >= 1 && K >= 1 && K <= M, Errc::invalid_dimensions,
          "need M >= K >= 1, got M=" + std::to_string(M) + " K=" + std::to_string(K));
  require(n >= 1, Errc::invalid_dimensions, "need at least one sample");

  ChannelSet set;
  set.M = M;
  set.K = K;
  set.seed = seed;
  set.dist = Dist::rayleigh;
  set.samples.assign(static_cast<std::size_t>(n), CMat());

  par::parallel_for(exec, n, [&](std::int64_t i) {
    rng::SplitMix64 g(rng::derive_seed(seed, static_cast<std::uint64_t>(i)));
    CMat h(M, K);
    for (int m = 0; m < M; ++m)
      for (int k = 0; k < K; ++k) h(m, k) = round_c64(g.next_cgauss());
    set.samples[static_cast<std::size_t>(i)] = std::move(h);
  });
  return set;
}

CMat gen_los(int M, const LosGeometry& geom) {
  const int K = static_cast<int>(geom.user_angles_deg.size());
  require(M >= 1 && K >= 1, Errc::invalid_dimensions, "need M >= 1 and at least one user");
  require(geom.pathloss.empty() || geom.pathloss.size() == geom.user_angles_deg.size(),
          Errc::invalid_dimensions, "pathloss list must match user count");
  require(geom.spacing_over_wavelength > 0, Errc::invalid_dimensions, "spacing must be positive");

  CMat h(M, K);
  for (int k = 0; k < K; ++k) {
    const double theta = geom.user_angles_deg[static_cast<std::size_t>(k)];
    require(theta >= 0.0 && theta <= 180.0, Errc::angle_out_of_range,
            "user angle " + std::to_string(theta) + " outside [0, 180]");
    const double beta = geom.pathloss.empty() ? 1.0 : geom.pathloss[static_cast<std::size_t>(k)];
    require(beta >= 0.0, Errc::invalid_dimensions, "pathloss must be nonnegative");
    const double amp = std::sqrt(beta);
    const double step = 2.0 * M_PI * geom.spacing_over_wavelength *
                        std::cos(theta * M_PI / 180.0);
    for (int m = 0; m < M; ++m) h(m, k) = std::polar(amp, -static_cast<double>(m) * step);
  }
  return h;
}

void save_channels(const ChannelSet& set, const std::string& path) {
  require(!set.samples.empty(), Errc::invalid_dimensions, "empty channel set");
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) fail(Errc::io_error, "cannot open " + path + " for writing");

  put_bytes(f.get(), kMagic, 4);
  put_le<std::uint8_t>(f.get(), kVersion);
  put_le<std::uint8_t>(f.get(), static_cast<std::uint8_t>(set.dist));
  put_le<std::uint16_t>(f.get(), 0);
  put_le<std::uint32_t>(f.get(), static_cast<std::uint32_t>(set.M));
  put_le<std::uint32_t>(f.get(), static_cast<std::uint32_t>(set.K));
  put_le<std::uint64_t>(f.get(), static_cast<std::uint64_t>(set.samples.size()));
  put_le<std::uint64_t>(f.get(), set.seed);

  // Sample-major, antenna-major, then user.
  for (const CMat& h : set.samples) {
    require(h.rows() == set.M && h.cols() == set.K, Errc::dimension_mismatch,
            "sample shape differs from header");
    for (int m = 0; m < set.M; ++m)
      for (int k = 0; k < set.K; ++k) {
        put_f32(f.get(), static_cast<float>(h(m, k).real()));
        put_f32(f.get(), static_cast<float>(h(m, k).imag()));
      }
  }
  if (std::fflush(f.get()) != 0) fail(Errc::io_error, "flush failed for " + path);
}

ChannelSet load_channels(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) fail(Errc::io_error, "cannot open " + path);

  char magic[4];
  get_bytes(f.get(), magic, 4, Errc::bad_magic);
  if (std::memcmp(magic, kMagic, 4) != 0) fail(Errc::bad_magic, "not a channel dataset: " + path);
  const auto version = get_le<std::uint8_t>(f.get(), Errc::bad_magic);
  if (version != kVersion) fail(Errc::version_mismatch, "unsupported version");
  const auto dist = get_le<std::uint8_t>(f.get(), Errc::bad_magic);
  if (dist > 1) fail(Errc::bad_magic, "unknown distribution tag");
  get_le<std::uint16_t>(f.get(), Errc::bad_magic);  // reserved
  const auto M = get_le<std::uint32_t>(f.get(), Errc::bad_magic);
  const auto K = get_le<std::uint32_t>(f.get(), Errc::bad_magic);
  const auto n = get_le<std::uint64_t>(f.get(), Errc::bad_magic);
  const auto seed = get_le<std::uint64_t>(f.get(), Errc::bad_magic);
  if (M == 0 || K == 0 || K > M || n == 0)
    fail(Errc::dimension_mismatch, "bad header dimensions");

  // The payload length is fixed by the header; any disagreement is a
  // malformed dataset, not a read error.
  const long header_end = std::ftell(f.get());
  if (header_end < 0 || std::fseek(f.get(), 0, SEEK_END) != 0)
    fail(Errc::io_error, "cannot determine file size of " + path);
  const long file_size = std::ftell(f.get());
  const long expected = header_end + static_cast<long>(n * M * K * 8ull);
  if (file_size != expected)
    fail(Errc::dimension_mismatch, "header declares " + std::to_string(n * M * K) +
                                       " entries but payload length differs");
  if (std::fseek(f.get(), header_end, SEEK_SET) != 0) fail(Errc::io_error, "seek failed");

  ChannelSet set;
  set.M = static_cast<int>(M);
  set.K = static_cast<int>(K);
  set.seed = seed;
  set.dist = static_cast<Dist>(dist);
  set.samples.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    CMat h(set.M, set.K);
    for (int m = 0; m < set.M; ++m)
      for (int k = 0; k < set.K; ++k) {
        const double re = get_f32(f.get());
        const double im = get_f32(f.get());
        h(m, k) = {re, im};
      }
    set.samples.push_back(std::move(h));
  }
  return set;
}

}  // namespace nlprecode::channel
