// Serial vs OpenMP comparison for the data-parallel kernels. The two paths
// use the same fixed chunk decomposition and reduce partial results in chunk
// order, so outputs must agree bit-for-bit; this tool reports wall time and
// verifies that agreement on real workloads.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "nlprecode/bussgang.hpp"
#include "nlprecode/channel.hpp"
#include "nlprecode/dab.hpp"
#include "nlprecode/gnn.hpp"
#include "nlprecode/precoders.hpp"

using namespace nlprecode;

namespace {

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct Row {
  std::string name;
  double serial_s = 0.0;
  double openmp_s = 0.0;
  bool identical = false;
};

void print_row(const Row& r) {
  std::printf("%-28s serial %8.3f s   openmp %8.3f s   speedup %5.2fx   %s\n", r.name.c_str(),
              r.serial_s, r.openmp_s, r.serial_s / r.openmp_s,
              r.identical ? "bit-identical" : "MISMATCH");
}

template <class F>
double timed(F&& f) {
  const double t0 = now_s();
  f();
  return now_s() - t0;
}

}  // namespace

int main() {
  std::printf("threads available: %d\n\n", par::max_threads());

  {
    Row r{"gen_rayleigh 16x2 x20k", 0, 0, false};
    channel::ChannelSet a, b;
    r.serial_s = timed([&] { a = channel::gen_rayleigh(16, 2, 20000, 1, par::Exec::serial); });
    r.openmp_s = timed([&] { b = channel::gen_rayleigh(16, 2, 20000, 1, par::Exec::openmp); });
    r.identical = true;
    for (std::size_t i = 0; i < a.samples.size(); ++i)
      if (a.samples[i] != b.samples[i]) r.identical = false;
    print_row(r);
  }

  const CMat h = channel::gen_rayleigh(8, 4, 1, 3).samples[0];
  const CMat w = precoders::zf(h, 8.0).w;
  const auto pa = pa::appendix_coeffs(-3.0);

  {
    Row r{"snidr_mc 8x4 x2e6", 0, 0, false};
    bussgang::LinkMetrics a, b;
    r.serial_s = timed(
        [&] { a = bussgang::snidr_mc(h, w, pa, {0.01}, 2000000, 7, par::Exec::serial); });
    r.openmp_s = timed(
        [&] { b = bussgang::snidr_mc(h, w, pa, {0.01}, 2000000, 7, par::Exec::openmp); });
    r.identical = a.snidr == b.snidr && a.sum_rate == b.sum_rate;
    print_row(r);
  }

  {
    Row r{"dab_precode 4x1, 8 restarts", 0, 0, false};
    dab::DabConfig cfg;
    cfg.restarts = 8;
    cfg.iterations = 150;
    cfg.seed = 5;
    const CMat h1 = channel::gen_rayleigh(4, 1, 1, 9).samples[0];
    dab::DabResult a, b;
    r.serial_s =
        timed([&] { a = dab::dab_precode(h1, pa, {0.04}, 4.0, cfg, par::Exec::serial); });
    r.openmp_s =
        timed([&] { b = dab::dab_precode(h1, pa, {0.04}, 4.0, cfg, par::Exec::openmp); });
    r.identical = a.w.w == b.w.w && a.objective == b.objective;
    print_row(r);
  }

  {
    Row r{"gnn train 16x2, 1 epoch", 0, 0, false};
    gnn::GnnArch arch;
    gnn::TrainConfig cfg;
    cfg.epochs = 1;
    cfg.seed = 11;
    const auto train_set = channel::gen_rayleigh(16, 2, 512, 13).samples;
    const auto val_set = channel::gen_rayleigh(16, 2, 64, 14).samples;
    gnn::TrainResult a, b;
    r.serial_s = timed(
        [&] { a = gnn::train(arch, cfg, train_set, val_set, pa, 16.0, par::Exec::serial); });
    r.openmp_s = timed(
        [&] { b = gnn::train(arch, cfg, train_set, val_set, pa, 16.0, par::Exec::openmp); });
    r.identical = true;
    for (std::size_t l = 0; l < a.params.layers.size(); ++l)
      if (a.params.layers[l].w_edge != b.params.layers[l].w_edge ||
          a.params.layers[l].w_m != b.params.layers[l].w_m ||
          a.params.layers[l].w_k != b.params.layers[l].w_k)
        r.identical = false;
    print_row(r);
  }

  return 0;
}
