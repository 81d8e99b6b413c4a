#pragma once

#include <cstdint>

#include "nlprecode/pa.hpp"
#include "nlprecode/parallel.hpp"
#include "nlprecode/types.hpp"

namespace nlprecode::bussgang {

struct NoiseSpec {
  double sigma2 = 1.0;  // receiver noise variance, linear power
};

struct LinkMetrics {
  Vec snidr;         // K linear ratios
  double sum_rate = 0.0;
  Vec desired;       // |h_k^T G w_k|^2 (analytic) or |B_k|^2 (Monte-Carlo)
  Vec interference;  // analytic only; folded into `distortion` for Monte-Carlo
  Vec distortion;    // received distortion power (+ interference for Monte-Carlo)
  double noise = 0.0;
};

// C_x = W W^H
CMat input_cov(const CMat& w);

// Per-antenna Bussgang gains for Gaussian inputs with powers p_m:
// g_m = sum_n (n+1)! beta_{2n+1} p_m^n.
CVec gain_diag(const pa::PolynomialPa& pa, const Vec& p);

// Diagonal gain matrix G(W).
CMat gain_matrix(const CMat& w, const pa::PolynomialPa& pa);

// Covariance of the uncorrelated distortion e = phi(x) - Gx:
// C_e = sum_{n=1..N} L_n (C_x o |C_x|^{o2n}) L_n^H with diagonal L_n.
CMat distortion_cov(const CMat& w, const pa::PolynomialPa& pa);

// Per-antenna amplifier output power E|phi(x_m)|^2 = |g_m|^2 p_m + [C_e]_mm.
Vec output_power_analytic(const CMat& w, const pa::PolynomialPa& pa);
Vec output_power_mc(const CMat& w, const pa::PaModel& pa, std::int64_t n_mc,
                    std::uint64_t seed, par::Exec exec = par::Exec::openmp);

LinkMetrics snidr_analytic(const CMat& h, const CMat& w, const pa::PolynomialPa& pa,
                           const NoiseSpec& noise);

// Monte-Carlo estimate for an arbitrary PA: B_k and E|d_k|^2 from noiseless
// received samples; noise enters the denominator analytically. Deterministic
// given (seed, n_mc): fixed batch decomposition, partials reduced in batch
// order, bit-identical for serial and OpenMP execution.
LinkMetrics snidr_mc(const CMat& h, const CMat& w, const pa::PaModel& pa,
                     const NoiseSpec& noise, std::int64_t n_mc, std::uint64_t seed,
                     par::Exec exec = par::Exec::openmp);

double sum_rate(const Vec& snidr);

double factorial(int n);
double binom(int n, int k);

}  // namespace nlprecode::bussgang
