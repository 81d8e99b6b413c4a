#include "nlprecode/precoders.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace nlprecode::precoders {

PrecodingMatrix normalize_power(const CMat& w_raw, double p_t) {
  require(p_t > 0.0, Errc::invalid_dimensions, "power budget must be positive");
  const double tr = input_power(w_raw);
  if (!(tr > 0.0)) fail(Errc::zero_matrix, "cannot normalize an all-zero matrix");
  PrecodingMatrix out;
  out.w = std::sqrt(p_t / tr) * w_raw;
  out.p_t = p_t;
  return out;
}

PrecodingMatrix mrt(const CMat& h, double p_t) {
  if (!(h.squaredNorm() > 0.0)) fail(Errc::zero_channel, "all-zero channel");
  return normalize_power(h.conjugate(), p_t);
}

PrecodingMatrix zf(const CMat& h, double p_t) {
  const Eigen::Index M = h.rows();
  const Eigen::Index K = h.cols();
  if (K > M) fail(Errc::singular_channel, "more users than antennas");
  const CMat gram = h.transpose() * h.conjugate();  // K x K Hermitian
  Eigen::LLT<CMat> llt(gram);
  if (llt.info() != Eigen::Success)
    fail(Errc::singular_channel, "channel Gram matrix is not positive definite");
  const CMat w_raw = h.conjugate() * llt.solve(CMat::Identity(K, K));
  return normalize_power(w_raw, p_t);
}

PrecodingMatrix z3ro(const CMat& h, double p_t, int m_s) {
  const Eigen::Index M = h.rows();
  require(h.cols() == 1, Errc::invalid_dimensions, "single-user precoder needs a column channel");
  require(m_s >= 1 && m_s < M, Errc::invalid_dimensions, "need 1 <= m_s < M");

  double sat = 0.0, rest = 0.0;
  for (Eigen::Index m = 0; m < M; ++m) {
    const double h4 = std::norm(h(m, 0)) * std::norm(h(m, 0));
    (m < m_s ? sat : rest) += h4;
  }
  if (!(sat > 0.0))
    fail(Errc::zero_gain_saturated_antenna, "saturated antennas see a zero channel");
  const double gamma = std::cbrt(rest / sat);

  CMat w_raw = h.conjugate();
  for (Eigen::Index m = 0; m < m_s; ++m) w_raw(m, 0) *= -gamma;
  return normalize_power(w_raw, p_t);
}

}  // namespace nlprecode::precoders
