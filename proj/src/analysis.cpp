#include "nlprecode/analysis.hpp"

#include <cmath>
#include <vector>

#include "nlprecode/bussgang.hpp"
#include "nlprecode/rng.hpp"

namespace nlprecode::analysis {

namespace {

CVec steering(int M, double theta_deg, double spacing) {
  CVec a(M);
  const double step = 2.0 * M_PI * spacing * std::cos(theta_deg * M_PI / 180.0);
  for (int m = 0; m < M; ++m) a(m) = std::polar(1.0, -m * step);
  return a;
}

RadiationPattern pattern_from_covs(const CMat& c_lin, const CMat& c_dist, const Vec& theta_deg,
                                   double spacing, par::Exec exec) {
  const int M = static_cast<int>(c_lin.rows());
  RadiationPattern out;
  out.theta_deg = theta_deg;
  out.p_lin.resize(theta_deg.size());
  out.p_dist.resize(theta_deg.size());
  out.p_sdr_db.resize(theta_deg.size());
  par::parallel_for(exec, theta_deg.size(), [&](std::int64_t i) {
    const CVec a = steering(M, theta_deg(i), spacing);
    const cplx ql = (a.transpose() * c_lin * a.conjugate()).value();
    const cplx qd = (a.transpose() * c_dist * a.conjugate()).value();
    const double pl = std::max(0.0, ql.real());
    const double pd = std::max(0.0, qd.real());
    out.p_lin(i) = pl;
    out.p_dist(i) = pd;
    const double sdr_db =
        pd > 0.0 ? 10.0 * std::log10(pl / pd) : kSdrCapDb;
    out.p_sdr_db(i) = std::min(sdr_db, kSdrCapDb);
  });
  return out;
}

}  // namespace

RadiationPattern radiation_pattern(const CMat& w, const pa::PolynomialPa& pa,
                                   const Vec& theta_deg, double spacing_over_wavelength,
                                   DistortionTerm term, par::Exec exec) {
  const CMat cx = bussgang::input_cov(w);
  const Eigen::Index M = w.rows();

  CMat c_dist;
  if (pa.linear()) {
    c_dist = CMat::Zero(M, M);
  } else {
    const CMat ce = bussgang::distortion_cov(w, pa);
    if (term == DistortionTerm::bussgang_residual) {
      c_dist = ce;
    } else {
      // u = phi(x) - beta_1 x = e + (G - beta_1 I) x, with e orthogonal to x:
      // C_u = C_e + (G - beta_1 I) C_x (G - beta_1 I)^H.
      const Vec p = w.rowwise().squaredNorm();
      CVec gd = bussgang::gain_diag(pa, p);
      gd.array() -= pa.coeffs[0];
      c_dist = ce + gd.asDiagonal() * cx * gd.conjugate().asDiagonal();
    }
  }
  return pattern_from_covs(cx, c_dist, theta_deg, spacing_over_wavelength, exec);
}

RadiationPattern radiation_pattern_mc(const CMat& w, const pa::PaModel& pa,
                                      const Vec& theta_deg, double spacing_over_wavelength,
                                      DistortionTerm term, std::int64_t n_mc,
                                      std::uint64_t seed, par::Exec exec) {
  const Eigen::Index M = w.rows();
  const Eigen::Index K = w.cols();
  constexpr std::int64_t kBatch = 4096;
  const std::int64_t n_batches = (n_mc + kBatch - 1) / kBatch;

  struct Partial {
    CMat c_lin, c_u;
    CVec sxy;  // sum y_m conj(x_m), for the Monte-Carlo Bussgang gains
    Vec sxx;
  };
  std::vector<Partial> parts(static_cast<std::size_t>(n_batches));
  par::parallel_for(exec, n_batches, [&](std::int64_t b) {
    const std::int64_t nb = std::min(kBatch, n_mc - b * kBatch);
    rng::SplitMix64 gen(rng::derive_seed(seed, static_cast<std::uint64_t>(b)));
    CMat s(K, nb);
    for (std::int64_t j = 0; j < nb; ++j)
      for (Eigen::Index k = 0; k < K; ++k) s(k, j) = gen.next_cgauss();
    const CMat x = w * s;
    const CMat y = pa::apply(pa, x);
    Partial p;
    p.c_lin = x * x.adjoint();
    p.sxy = (y.cwiseProduct(x.conjugate())).rowwise().sum();
    p.sxx = x.cwiseAbs2().rowwise().sum();
    if (term == DistortionTerm::nonlinear_term) {
      cplx beta1(1.0, 0.0);
      if (const auto* poly = std::get_if<pa::PolynomialPa>(&pa)) beta1 = poly->coeffs[0];
      const CMat u = y - beta1 * x;
      p.c_u = u * u.adjoint();
    } else {
      p.c_u = CMat::Zero(M, M);  // needs gains; second pass below
    }
    parts[static_cast<std::size_t>(b)] = std::move(p);
  });

  CMat c_lin = CMat::Zero(M, M);
  CMat c_u = CMat::Zero(M, M);
  CVec sxy = CVec::Zero(M);
  Vec sxx = Vec::Zero(M);
  for (const Partial& p : parts) {
    c_lin += p.c_lin;
    c_u += p.c_u;
    sxy += p.sxy;
    sxx += p.sxx;
  }
  c_lin /= static_cast<double>(n_mc);

  if (term == DistortionTerm::bussgang_residual) {
    // e = y - G x with the Monte-Carlo gains; second pass over the same draw.
    const CVec g = sxy.cwiseQuotient(sxx.cast<cplx>());
    std::vector<CMat> parts2(static_cast<std::size_t>(n_batches));
    par::parallel_for(exec, n_batches, [&](std::int64_t b) {
      const std::int64_t nb = std::min(kBatch, n_mc - b * kBatch);
      rng::SplitMix64 gen(rng::derive_seed(seed, static_cast<std::uint64_t>(b)));
      CMat s(K, nb);
      for (std::int64_t j = 0; j < nb; ++j)
        for (Eigen::Index k = 0; k < K; ++k) s(k, j) = gen.next_cgauss();
      const CMat x = w * s;
      const CMat e = pa::apply(pa, x) - g.asDiagonal() * x;
      parts2[static_cast<std::size_t>(b)] = e * e.adjoint();
    });
    c_u = CMat::Zero(M, M);
    for (const CMat& p : parts2) c_u += p;
  }
  c_u /= static_cast<double>(n_mc);

  return pattern_from_covs(c_lin, c_u, theta_deg, spacing_over_wavelength, exec);
}

double pa_consumed_power(const Vec& p_out, double p_sat, double eta_max) {
  require(p_sat > 0.0 && eta_max > 0.0, Errc::invalid_dimensions,
          "saturation power and efficiency must be positive");
  return std::sqrt(p_sat) / eta_max * p_out.cwiseMax(0.0).cwiseSqrt().sum();
}

FlopCount gnn_flops(int M, int K, int d, int L) {
  const double e = static_cast<double>(M) * K;
  const double dd = d;
  FlopCount c;
  c.mults = e * (6.0 * dd + (L - 2) * 3.0 * dd * dd + 6.0 * dd);
  c.adds = e * (5.0 * dd + 2.0 * (M - 1 + K - 1) +
                (L - 2) * (3.0 * dd * dd - dd + dd * (M - 1 + K - 1)) + (6.0 * dd - 2.0));
  c.flops = c.mults + c.adds;
  c.serial_flops = dd * dd * L + M * dd * L + K * dd * L;
  return c;
}

FlopCount zf_flops(int M, int K) {
  FlopCount c;
  const double m = M, k = K;
  c.mults = 8.0 * m * k * k + 2.0 * k * k * k + 6.0 * k * k;
  c.adds = 8.0 * m * k * k + 2.0 * k * k * k;
  c.flops = 16.0 * m * k * k + 4.0 * k * k * k + 6.0 * k * k;
  c.serial_flops = c.flops;
  return c;
}

FlopCount dab_flops(int M, int K, int P, int I) {
  const double m = M, k = K;
  const double pi = static_cast<double>(P) * I;
  const double m2 = m * m, m3 = m2 * m, m4 = m3 * m;
  const double k2 = k * k, k3 = k2 * k;
  FlopCount c;
  c.adds = pi * (60.0 * m4 * k2 + 24.0 * m3 * k3 + 12.0 * m3 * k2 + 12.0 * m2 * k3 +
                 420.0 * m2 * k2 + 15.0 * m * k2 + 4.0 * m * k);
  c.mults = pi * (60.0 * m4 * k2 + 24.0 * m3 * k3 - 24.0 * m3 * k2 + 6.0 * m2 * k3 +
                  324.0 * m2 * k2 - 3.0 * m * k3 + 3.0 * m * k2 + 6.0 * m * k);
  c.flops = c.mults + c.adds;
  c.serial_flops = c.flops;
  return c;
}

FlopCount flops(const std::string& precoder, int M, int K, int d, int L, int P, int I) {
  if (precoder == "gnn") return gnn_flops(M, K, d, L);
  if (precoder == "zf") return zf_flops(M, K);
  if (precoder == "dab") return dab_flops(M, K, P, I);
  fail(Errc::config_error, "no complexity model for precoder '" + precoder + "'");
}

CountedForward count_gnn_forward(const gnn::GnnArch& arch, const gnn::GnnParams& params,
                                 const CMat& h) {
  gnn::check_shapes(arch, params);
  require(arch.in_features == 2 && arch.include_self, Errc::invalid_dimensions,
          "the complexity model covers the 2-feature self-inclusive network");
  const int M = static_cast<int>(h.rows());
  const int K = static_cast<int>(h.cols());
  const int E = M * K;
  const int L = arch.layers;

  CountedForward c;
  Mat z(arch.in_features, E);
  for (int m = 0; m < M; ++m)
    for (int k = 0; k < K; ++k) {
      z(0, m * K + k) = h(m, k).real();
      z(1, m * K + k) = h(m, k).imag();
    }

  for (int l = 0; l < L; ++l) {
    const auto& layer = params.layers[static_cast<std::size_t>(l)];
    const int din = static_cast<int>(layer.w_edge.cols());
    const int dout = static_cast<int>(layer.w_edge.rows());

    // Message aggregation, recomputed per edge as the complexity model
    // assumes: (|N(m)|-1 + |N(k)|-1) additions per feature.
    Mat zm(din, E), zk(din, E);
    std::int64_t msg_adds = 0;
    for (int m = 0; m < M; ++m)
      for (int k = 0; k < K; ++k) {
        const int e = m * K + k;
        Vec accm = Vec::Zero(din), acck = Vec::Zero(din);
        for (int k2 = 0; k2 < K; ++k2) {
          if (k2 == 0)
            accm = z.col(m * K + k2);
          else {
            accm += z.col(m * K + k2);
            msg_adds += din;
          }
        }
        for (int m2 = 0; m2 < M; ++m2) {
          if (m2 == 0)
            acck = z.col(k);
          else {
            acck += z.col(m2 * K + k);
            msg_adds += din;
          }
        }
        zm.col(e) = accm / K;  // scaling not counted
        zk.col(e) = acck / M;
      }
    if (l + 1 < L)
      c.adds += msg_adds;
    else
      c.final_msg_adds += msg_adds;

    // Update: three matrix-vector products per edge plus the two additions
    // combining them.
    Mat z_next(dout, E);
    for (int e = 0; e < E; ++e) {
      Vec a = Vec::Zero(dout), b = Vec::Zero(dout), d = Vec::Zero(dout);
      for (int r = 0; r < dout; ++r) {
        double sa = 0.0, sb = 0.0, sd = 0.0;
        for (int q = 0; q < din; ++q) {
          sa += layer.w_edge(r, q) * z(q, e);
          sb += layer.w_m(r, q) * zm(q, e);
          sd += layer.w_k(r, q) * zk(q, e);
          c.mults += 3;
          if (q > 0) c.adds += 3;
        }
        a(r) = sa;
        b(r) = sb;
        d(r) = sd;
      }
      z_next.col(e) = a + b + d;
      c.adds += 2ll * dout;
    }
    if (l + 1 < L)
      z = z_next.unaryExpr(
          [s = arch.leaky_slope](double v) { return v > 0.0 ? v : s * v; });
    else
      z = z_next;
  }
  return c;
}

DspSizing dsp_sizing(double carrier_hz, double velocity_mps, double flops_per_pass,
                     double duty_fraction) {
  require(carrier_hz > 0 && velocity_mps > 0 && flops_per_pass > 0 && duty_fraction > 0,
          Errc::invalid_dimensions, "all sizing inputs must be positive");
  constexpr double kC = 3.0e8;  // propagation speed used by the sizing rule
  const double f_m = velocity_mps / kC * carrier_hz;
  DspSizing out;
  out.coherence_s = 1.0 / (2.0 * f_m);
  out.ops_per_s = flops_per_pass / (duty_fraction * out.coherence_s);
  return out;
}

}  // namespace nlprecode::analysis
