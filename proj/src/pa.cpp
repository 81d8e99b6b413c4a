#include "nlprecode/pa.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "nlprecode/rng.hpp"

namespace nlprecode::pa {

double psat_from_ibo(const IboSpec& spec) {
  require(spec.p_in > 0, Errc::invalid_dimensions, "p_in must be positive");
  return spec.p_in / std::pow(10.0, spec.ibo_db / 10.0);
}

cplx poly_apply(const PolynomialPa& pa, cplx x) {
  const double a2 = std::norm(x);
  // Horner in |x|^2.
  cplx acc(0.0, 0.0);
  for (std::size_t i = pa.coeffs.size(); i-- > 0;) acc = acc * a2 + pa.coeffs[i];
  return acc * x;
}

cplx rapp_apply(const RappPa& pa, cplx x) {
  const double r = std::abs(x);
  if (r == 0.0) return {0.0, 0.0};
  const double s2 = 2.0 * pa.smoothness;
  const double amp = r / std::pow(1.0 + std::pow(r / std::sqrt(pa.p_sat), s2), 1.0 / s2);
  const double rq = std::pow(r, pa.q);
  const double phase_shift = pa.am_pm_a * rq / (1.0 + rq / std::pow(pa.am_pm_b, pa.q));
  return std::polar(amp, std::arg(x) + phase_shift);
}

cplx softlimiter_apply(const SoftLimiterPa& pa, cplx x) {
  const double r = std::abs(x);
  const double cap = std::sqrt(pa.p_sat);
  if (r <= cap) return x;
  return x * (cap / r);
}

namespace {

inline cplx apply_one(const PolynomialPa& m, cplx x) { return poly_apply(m, x); }
inline cplx apply_one(const RappPa& m, cplx x) { return rapp_apply(m, x); }
inline cplx apply_one(const SoftLimiterPa& m, cplx x) { return softlimiter_apply(m, x); }

}  // namespace

cplx apply(const PaModel& pa, cplx x) {
  return std::visit([&](const auto& m) { return apply_one(m, x); }, pa);
}

CMat apply(const PaModel& pa, const CMat& x) {
  CMat y(x.rows(), x.cols());
  std::visit(
      [&](const auto& m) {
        const cplx* src = x.data();
        cplx* dst = y.data();
        const Eigen::Index n = x.size();
        for (Eigen::Index i = 0; i < n; ++i) dst[i] = apply_one(m, src[i]);
      },
      pa);
  return y;
}

double am_am(const PaModel& pa, double r) { return std::abs(apply(pa, cplx(r, 0.0))); }

namespace {

struct Row {
  double ibo;
  cplx b3, b5, b7, b9, b11;
};

// 11th-order coefficients per IBO; scales 1e-2, 1e-3, 1e-5, 1e-7, 1e-9
// applied below.
const Row kTable[] = {
    {-9.0, {-4.38184836, -10.1466832}, {1.50490437, 8.422084885}, {-3.13452827, -28.1868627},
     {3.49967293, 42.06333106}, {-1.59432984, -23.1868139}},
    {-7.5, {-5.79334438, -9.36769411}, {2.39315994, 7.94859107}, {-5.57663136, -26.92641291},
     {6.65066314, 40.4837957}, {-3.14808144, -22.4280442}},
    {-6.0, {-7.50994886, -8.42352484}, {3.66782506, 7.26453523}, {-9.54049052, -24.8371067},
     {12.2703316, 37.5613932}, {-6.13183499, -20.8924283}},
    {-4.5, {-9.35828409, -7.41305601}, {5.16172165, 6.46522185}, {-14.4481282, -22.2483069},
     {19.4963213, 33.7874265}, {-10.0752209, -18.8479147}},
    {-3.0, {-11.1143930, -6.30816977}, {6.60156653, 5.47141526}, {-19.1451680, -18.6610370},
     {26.2822435, 28.0380833}, {-13.6811147, -15.4579691}},
    {-1.5, {-12.903319, -5.49758824}, {8.21176444, 4.85204392}, {-24.8588087, -16.8144990},
     {35.2215545, 25.6527492}, {-18.8139985, -14.3562319}},
    {0.0, {-14.4473655, -4.67375592}, {9.58442261, 4.13617338}, {-29.6362436, -14.3570171},
     {42.5309097, 21.9271142}, {-22.9128062, -12.2805850}},
};

}  // namespace

PolynomialPa appendix_coeffs(double ibo_db) {
  for (const Row& r : kTable) {
    if (std::abs(r.ibo - ibo_db) < 1e-9) {
      PolynomialPa pa;
      pa.coeffs = {cplx(1.0, 0.0), r.b3 * 1e-2, r.b5 * 1e-3, r.b7 * 1e-5, r.b9 * 1e-7,
                   r.b11 * 1e-9};
      return pa;
    }
  }
  fail(Errc::unknown_ibo, "no tabulated coefficients for ibo_db=" + std::to_string(ibo_db));
}

const std::vector<double>& appendix_ibo_grid() {
  static const std::vector<double> grid = {-9.0, -7.5, -6.0, -4.5, -3.0, -1.5, 0.0};
  return grid;
}

FitResult fit_polynomial(const PaModel& target, const IboSpec& spec, int order_index,
                         std::int64_t n_fit, std::uint64_t seed, FitMethod method,
                         bool fix_beta1) {
  require(order_index >= 1, Errc::invalid_dimensions, "order index must be >= 1");
  require(n_fit >= order_index + 1, Errc::invalid_dimensions, "not enough fit samples");
  const int n0 = fix_beta1 ? 1 : 0;
  const int nc = order_index + 1 - n0;
  const double sp = std::sqrt(spec.p_in);

  // Normal equations for basis psi_n(u) = u*|u|^(2n) on inputs normalized by
  // sqrt(p_in); keeps the Gram matrix well-scaled at high orders.
  Eigen::MatrixXcd gram = Eigen::MatrixXcd::Zero(nc, nc);
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(nc);
  rng::SplitMix64 gen(seed);
  Eigen::VectorXcd basis(nc);
  for (std::int64_t i = 0; i < n_fit; ++i) {
    cplx u;
    if (method == FitMethod::gaussian) {
      u = gen.next_cgauss();
    } else {
      // Uniform amplitude sweep with random phase.
      const double r = 2.0 * static_cast<double>(i) / static_cast<double>(n_fit - 1);
      u = std::polar(r, 2.0 * M_PI * gen.next_unit());
    }
    const cplx x = u * sp;
    const double u2 = std::norm(u);
    cplx b = u;
    for (int k = 0; k < n0; ++k) b *= u2;
    for (int n = 0; n < nc; ++n) {
      basis(n) = b;
      b *= u2;
    }
    cplx y = apply(target, x);
    if (fix_beta1) y -= sp * u;  // residual after the pinned linear term
    gram.noalias() += basis.conjugate() * basis.transpose();
    rhs.noalias() += basis.conjugate() * y;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || !std::isfinite(hi))
    fail(Errc::ill_conditioned_basis, "normal equations are numerically singular");
  const double condition = hi / lo;
  if (condition > 1e15)
    fail(Errc::ill_conditioned_basis,
         "normal equations condition number " + std::to_string(condition));

  Eigen::VectorXcd c = gram.ldlt().solve(rhs);

  FitResult out;
  out.condition = condition;
  out.pa.coeffs.assign(static_cast<std::size_t>(order_index + 1), cplx(0.0, 0.0));
  if (fix_beta1) out.pa.coeffs[0] = cplx(1.0, 0.0);
  // Undo the input normalization: beta_{2n+1} = c_n / p_in^{(2n+1)/2}.
  double scale = sp * (fix_beta1 ? spec.p_in : 1.0);
  for (int n = 0; n < nc; ++n) {
    out.pa.coeffs[static_cast<std::size_t>(n + n0)] = c(n) / scale;
    scale *= spec.p_in;
  }

  // Residual on an independent draw from the same design.
  rng::SplitMix64 check(rng::derive_seed(seed, 0xf17));
  double ss = 0.0;
  const std::int64_t n_check = std::min<std::int64_t>(n_fit, 20000);
  for (std::int64_t i = 0; i < n_check; ++i) {
    cplx x;
    if (method == FitMethod::gaussian) {
      x = check.next_cgauss() * sp;
    } else {
      const double r = 2.0 * sp * static_cast<double>(i) / static_cast<double>(n_check - 1);
      x = std::polar(r, 2.0 * M_PI * check.next_unit());
    }
    ss += std::norm(apply(target, x) - poly_apply(out.pa, x));
  }
  out.residual_rms = std::sqrt(ss / static_cast<double>(n_check));
  return out;
}

}  // namespace nlprecode::pa
