#pragma once

#include "nlprecode/autodiff.hpp"
#include "nlprecode/pa.hpp"
#include "nlprecode/types.hpp"

namespace nlprecode::rate_graph {

// Differentiable twin of bussgang::snidr_analytic: records the achievable
// sum rate R(W) for channel h, polynomial PA and noise sigma2 on the tape.
// Returns a 1x1 node.
int sum_rate_node(ad::Tape& t, ad::Cx w, const CMat& h, const pa::PolynomialPa& pa,
                  double sigma2);

// Scalar normalization to Tr(WW^H) = p_t. Throws zero-matrix when the input
// is identically zero.
ad::Cx normalize_power_node(ad::Tape& t, ad::Cx w, double p_t);

// Batched twin over B samples: w_blocks is an (M x B*K) complex block matrix
// of raw precoders; each block is power-normalized to p_t, its rate taken
// against hs[b] and sigma2[b], and the per-sample rates are summed into one
// 1x1 node. Bit-for-bit agreement with B separate single-sample graphs is
// not promised, only agreement to numerical accuracy.
int sum_rate_node_blocks(ad::Tape& t, ad::Cx w_blocks, const std::vector<const CMat*>& hs,
                         const pa::PolynomialPa& pa, const double* sigma2, double p_t);

}  // namespace nlprecode::rate_graph
