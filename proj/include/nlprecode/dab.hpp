#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "nlprecode/bussgang.hpp"
#include "nlprecode/parallel.hpp"
#include "nlprecode/precoding.hpp"

namespace nlprecode::dab {

enum class StepRule { backtracking, decaying, fixed };
enum class GradientMode { reverse_mode, finite_difference };

struct DabConfig {
  int restarts = 50;
  int iterations = 1000;
  StepRule step = StepRule::backtracking;
  GradientMode gradient = GradientMode::reverse_mode;
  double fd_delta = 1e-5;
  double mu0 = 1e-2;  // initial step for the decaying rule
  std::uint64_t seed = 0;
};

struct TracePoint {
  int restart = 0;
  int iteration = 0;
  double objective = 0.0;
};

struct DabResult {
  PrecodingMatrix w;
  double objective = 0.0;
  int best_restart = 0;
  std::vector<TracePoint> trace;
};

// Forward finite differences over the complex entries:
// grad(m,k) = ((R(W + d e_Re) - R(W)) + j (R(W + d e_Im) - R(W))) / d.
CMat fd_gradient(const std::function<double(const CMat&)>& objective, const CMat& w,
                 double delta);

// Scale W by c > 0 so the mean post-amplifier power E||phi(cWs)||^2 equals
// p_t to 0.1% relative (bisection on c). Analytic power for polynomial PAs;
// Monte-Carlo with a fixed seed otherwise. no-bracket when the PA output
// power cannot reach p_t (e.g. a soft limiter with M p_sat < p_t).
PrecodingMatrix project_output_power(const CMat& w, const pa::PaModel& pa, double p_t,
                                     std::int64_t n_mc = 200000, std::uint64_t seed = 1);

// Multi-restart projected gradient ascent on the analytic sum rate.
// Restart 0 starts at ZF, later restarts at ZF plus relative-scale-0.5
// Gaussian perturbations. Deterministic given (h, cfg.seed).
DabResult dab_precode(const CMat& h, const pa::PolynomialPa& pa,
                      const bussgang::NoiseSpec& noise, double p_t, const DabConfig& cfg,
                      par::Exec exec = par::Exec::openmp);

}  // namespace nlprecode::dab
