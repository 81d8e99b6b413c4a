#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "nlprecode/types.hpp"

namespace nlprecode::pa {

// Odd-order complex polynomial amplifier of order 2N+1:
//   phi(x) = sum_{n=0..N} beta[n] * x * |x|^(2n),  beta[0] = beta_1.
struct PolynomialPa {
  std::vector<cplx> coeffs;  // [beta_1, beta_3, ..., beta_{2N+1}]

  int order_index() const { return static_cast<int>(coeffs.size()) - 1; }
  bool linear() const { return coeffs.size() == 1; }
};

// Modified Rapp model: smooth AM/AM saturation plus AM/PM rotation (radians).
struct RappPa {
  double p_sat = 1.0;
  double smoothness = 2.0;  // S
  double q = 4.0;
  double am_pm_a = -0.315;  // A
  double am_pm_b = 1.137;   // B
};

// Ideal-predistortion limit: linear up to sqrt(p_sat), hard clip beyond,
// no phase conversion.
struct SoftLimiterPa {
  double p_sat = 1.0;
};

using PaModel = std::variant<PolynomialPa, RappPa, SoftLimiterPa>;

// Back-off operating point. ibo_db = 10*log10(p_in / p_sat); driving the PA
// harder means more negative IBO.
struct IboSpec {
  double ibo_db = -3.0;
  double p_in = 1.0;
};

double psat_from_ibo(const IboSpec& spec);

cplx poly_apply(const PolynomialPa& pa, cplx x);
cplx rapp_apply(const RappPa& pa, cplx x);
cplx softlimiter_apply(const SoftLimiterPa& pa, cplx x);
cplx apply(const PaModel& pa, cplx x);

// Element-wise PA over a matrix of antenna signals.
CMat apply(const PaModel& pa, const CMat& x);

enum class FitMethod {
  gaussian,        // inputs x ~ CN(0, p_in); matches precoded-signal statistics
  amplitude_grid,  // real amplitudes uniform on [0, 2*sqrt(p_in)]
};

struct FitResult {
  PolynomialPa pa;
  double residual_rms = 0.0;   // rms of |target(x) - poly(x)| over the fit set
  double condition = 0.0;      // condition number of the normal equations
};

// Least-squares fit of the order-(2N+1) polynomial to an arbitrary PA at the
// given operating point. Linear in the coefficients; solved via the normal
// equations on sqrt(p_in)-normalized inputs. fix_beta1 pins beta_1 = 1 and
// fits only the distortion orders.
FitResult fit_polynomial(const PaModel& target, const IboSpec& spec, int order_index,
                         std::int64_t n_fit, std::uint64_t seed,
                         FitMethod method = FitMethod::gaussian, bool fix_beta1 = false);

// Tabulated 11th-order coefficients (beta_1 = 1) for
// ibo_db in {-9, -7.5, -6, -4.5, -3, -1.5, 0}.
PolynomialPa appendix_coeffs(double ibo_db);
const std::vector<double>& appendix_ibo_grid();

// AM/AM transfer |phi(r)| for real input amplitude r >= 0.
double am_am(const PaModel& pa, double r);

}  // namespace nlprecode::pa
