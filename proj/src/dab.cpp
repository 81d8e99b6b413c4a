#include "nlprecode/dab.hpp"

#include <cmath>

#include "nlprecode/precoders.hpp"
#include "nlprecode/rate_graph.hpp"
#include "nlprecode/rng.hpp"

namespace nlprecode::dab {

CMat fd_gradient(const std::function<double(const CMat&)>& objective, const CMat& w,
                 double delta) {
  require(delta > 0.0, Errc::invalid_dimensions, "delta must be positive");
  const double r0 = objective(w);
  CMat g(w.rows(), w.cols());
  CMat probe = w;
  for (Eigen::Index k = 0; k < w.cols(); ++k)
    for (Eigen::Index m = 0; m < w.rows(); ++m) {
      probe(m, k) = w(m, k) + delta;
      const double rre = objective(probe);
      probe(m, k) = w(m, k) + cplx(0.0, delta);
      const double rim = objective(probe);
      probe(m, k) = w(m, k);
      g(m, k) = cplx(rre - r0, rim - r0) / delta;
    }
  return g;
}

namespace {

double total_output_power(const CMat& w, const pa::PaModel& pa, std::int64_t n_mc,
                          std::uint64_t seed) {
  if (const auto* poly = std::get_if<pa::PolynomialPa>(&pa))
    return bussgang::output_power_analytic(w, *poly).sum();
  // Fixed seed: the same symbol draw for every probe keeps the power curve
  // smooth in the scale factor.
  return bussgang::output_power_mc(w, pa, n_mc, seed, par::Exec::serial).sum();
}

}  // namespace

PrecodingMatrix project_output_power(const CMat& w, const pa::PaModel& pa, double p_t,
                                     std::int64_t n_mc, std::uint64_t seed) {
  require(p_t > 0.0, Errc::invalid_dimensions, "power budget must be positive");
  constexpr double kTol = 1e-4;  // relative; well inside the 0.1% contract

  auto power = [&](double c) { return total_output_power(c * w, pa, n_mc, seed); };

  double hi = 1.0;
  double p_hi = power(hi);
  double prev = -1.0;
  while (p_hi < p_t) {
    if (hi > 1e12 || std::abs(p_hi - prev) <= 1e-12 * p_t)
      fail(Errc::no_bracket,
           "post-amplifier power saturates at " + std::to_string(p_hi) + " below budget");
    prev = p_hi;
    hi *= 2.0;
    p_hi = power(hi);
  }
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double p_mid = power(mid);
    if (std::abs(p_mid - p_t) <= kTol * p_t) {
      return PrecodingMatrix{mid * w, p_t};
    }
    (p_mid < p_t ? lo : hi) = mid;
  }
  PrecodingMatrix out{0.5 * (lo + hi) * w, p_t};
  return out;
}

namespace {

struct RestartResult {
  CMat w;
  double objective = -1.0;
  std::vector<TracePoint> trace;
};

double rate_of(const CMat& h, const CMat& w, const pa::PolynomialPa& pa, double sigma2) {
  return bussgang::snidr_analytic(h, w, pa, bussgang::NoiseSpec{sigma2}).sum_rate;
}

CMat reverse_gradient(const CMat& h, const CMat& w, const pa::PolynomialPa& pa, double sigma2) {
  ad::Tape t;
  const ad::Cx wn = ad::cx_leaf(t, w, true);
  const int rate = rate_graph::sum_rate_node(t, wn, h, pa, sigma2);
  t.backward(rate);
  const Mat gre = t.grad_of(wn.re);
  const Mat gim = t.grad_of(wn.im);
  CMat g(w.rows(), w.cols());
  g.real() = gre;
  g.imag() = gim;
  return g;
}

RestartResult run_restart(const CMat& h, const pa::PolynomialPa& pa, double sigma2, double p_t,
                          const DabConfig& cfg, int restart, const CMat& w_zf) {
  const Eigen::Index M = h.rows();
  const Eigen::Index K = h.cols();

  CMat w0 = w_zf;
  if (restart > 0) {
    rng::SplitMix64 gen(rng::derive_seed(cfg.seed, static_cast<std::uint64_t>(restart)));
    const double scale =
        0.5 * w_zf.norm() / std::sqrt(static_cast<double>(M) * static_cast<double>(K));
    for (Eigen::Index k = 0; k < K; ++k)
      for (Eigen::Index m = 0; m < M; ++m) w0(m, k) += scale * gen.next_cgauss();
  }

  RestartResult res;
  res.trace.reserve(static_cast<std::size_t>(cfg.iterations) + 1);
  CMat w = project_output_power(w0, pa, p_t).w;
  double obj = rate_of(h, w, pa, sigma2);
  res.trace.push_back({restart, 0, obj});

  for (int i = 1; i <= cfg.iterations; ++i) {
    CMat grad;
    if (cfg.gradient == GradientMode::reverse_mode) {
      grad = reverse_gradient(h, w, pa, sigma2);
    } else {
      grad = fd_gradient([&](const CMat& probe) { return rate_of(h, probe, pa, sigma2); }, w,
                         cfg.fd_delta);
    }

    if (cfg.step != StepRule::backtracking) {
      const double mu = cfg.step == StepRule::fixed
                            ? cfg.mu0
                            : cfg.mu0 / (1.0 + static_cast<double>(i) / 100.0);
      w = project_output_power(w + mu * grad, pa, p_t).w;
      obj = rate_of(h, w, pa, sigma2);
    } else {
      double mu = 1.0;
      bool improved = false;
      while (mu > 1e-12) {
        const CMat cand = project_output_power(w + mu * grad, pa, p_t).w;
        const double cand_obj = rate_of(h, cand, pa, sigma2);
        if (cand_obj > obj) {
          w = cand;
          obj = cand_obj;
          improved = true;
          break;
        }
        mu *= 0.5;
      }
      if (!improved) {
        // Stationary under the line search; remaining iterations would not move.
        for (int j = i; j <= cfg.iterations; ++j) res.trace.push_back({restart, j, obj});
        break;
      }
    }
    res.trace.push_back({restart, i, obj});
  }
  res.w = w;
  res.objective = obj;
  return res;
}

}  // namespace

DabResult dab_precode(const CMat& h, const pa::PolynomialPa& pa,
                      const bussgang::NoiseSpec& noise, double p_t, const DabConfig& cfg,
                      par::Exec exec) {
  require(cfg.restarts >= 1 && cfg.iterations >= 1, Errc::invalid_dimensions,
          "need at least one restart and one iteration");
  const CMat w_zf = precoders::zf(h, p_t).w;

  std::vector<RestartResult> results(static_cast<std::size_t>(cfg.restarts));
  par::parallel_for(exec, cfg.restarts, [&](std::int64_t r) {
    results[static_cast<std::size_t>(r)] =
        run_restart(h, pa, noise.sigma2, p_t, cfg, static_cast<int>(r), w_zf);
  });

  DabResult out;
  int best = 0;
  for (int r = 1; r < cfg.restarts; ++r)
    if (results[static_cast<std::size_t>(r)].objective >
        results[static_cast<std::size_t>(best)].objective)
      best = r;
  out.best_restart = best;
  out.objective = results[static_cast<std::size_t>(best)].objective;
  out.w = PrecodingMatrix{results[static_cast<std::size_t>(best)].w, p_t};
  for (const RestartResult& r : results)
    out.trace.insert(out.trace.end(), r.trace.begin(), r.trace.end());
  return out;
}

}  // namespace nlprecode::dab
