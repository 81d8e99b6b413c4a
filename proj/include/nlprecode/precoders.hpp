#pragma once

#include "nlprecode/precoding.hpp"
#include "nlprecode/types.hpp"

namespace nlprecode::precoders {

// Scalar normalization alpha = sqrt(p_t / Tr(W W^H)).
PrecodingMatrix normalize_power(const CMat& w_raw, double p_t);

// Maximum ratio transmission: W = alpha H^*.
PrecodingMatrix mrt(const CMat& h, double p_t);

// Zero forcing: W = alpha H^* (H^T H^*)^{-1}; Gram inverse via Cholesky.
PrecodingMatrix zf(const CMat& h, double p_t);

// Single-user third-order-nulling precoder: antennas 0..m_s-1 are driven
// with gain -gamma, gamma = (sum_{m>=m_s}|h_m|^4 / sum_{m<m_s}|h_m|^4)^(1/3),
// so that sum_m h_m w_m |w_m|^2 = 0.
PrecodingMatrix z3ro(const CMat& h, double p_t, int m_s = 1);

}  // namespace nlprecode::precoders
