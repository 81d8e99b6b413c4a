#include "nlprecode/rate_graph.hpp"

#include <cmath>

#include "nlprecode/bussgang.hpp"

namespace nlprecode::rate_graph {

using ad::Cx;
using ad::Tape;

namespace {

// Horner evaluation of a complex-coefficient polynomial in a real node p
// (elementwise): acc = sum_i coeff[i] * p^i.
Cx poly_in_p(Tape& t, int p, const std::vector<cplx>& coeff) {
  const auto rows = t.val(p).rows();
  const auto cols = t.val(p).cols();
  const std::size_t n = coeff.size();
  int acc_re = t.leaf(Mat::Constant(rows, cols, coeff[n - 1].real()));
  int acc_im = t.leaf(Mat::Constant(rows, cols, coeff[n - 1].imag()));
  for (std::size_t i = n - 1; i-- > 0;) {
    acc_re = t.add_const(t.hadamard(acc_re, p), coeff[i].real());
    acc_im = t.add_const(t.hadamard(acc_im, p), coeff[i].imag());
  }
  return {acc_re, acc_im};
}

// l * l^H for a complex column-vector node.
Cx outer_self(Tape& t, Cx l) {
  const int lre_t = t.transpose(l.re);
  const int lim_t = t.transpose(l.im);
  return {t.add(t.matmul(l.re, lre_t), t.matmul(l.im, lim_t)),
          t.sub(t.matmul(l.im, lre_t), t.matmul(l.re, lim_t))};
}

}  // namespace

int sum_rate_node(Tape& t, Cx w, const CMat& h, const pa::PolynomialPa& pa, double sigma2) {
  require(h.rows() == t.val(w.re).rows() && h.cols() == t.val(w.re).cols(),
          Errc::dimension_mismatch, "channel and precoder shapes differ");
  const int M = static_cast<int>(h.rows());
  const int K = static_cast<int>(h.cols());
  const int N = pa.order_index();

  // Per-antenna input power p_m = [C_x]_mm.
  const int p = t.rowsum(ad::cx_abs2(t, w));

  // Bussgang gains g_m = sum_n (n+1)! beta_{2n+1} p_m^n.
  std::vector<cplx> gain_coeff(static_cast<std::size_t>(N) + 1);
  for (int n = 0; n <= N; ++n)
    gain_coeff[static_cast<std::size_t>(n)] =
        bussgang::factorial(n + 1) * pa.coeffs[static_cast<std::size_t>(n)];
  const Cx g = poly_in_p(t, p, gain_coeff);

  // G W via row broadcast of the gains.
  const int gre_b = t.bcast_col(g.re, K);
  const int gim_b = t.bcast_col(g.im, K);
  const Cx gw = {t.sub(t.hadamard(gre_b, w.re), t.hadamard(gim_b, w.im)),
                 t.add(t.hadamard(gre_b, w.im), t.hadamard(gim_b, w.re))};

  const CMat ht = h.transpose();
  const Cx ht_node = ad::cx_leaf(t, ht);
  const Cx a = ad::cx_matmul(t, ht_node, gw);  // a(k,k') = h_k^T G w_k'

  const int s = ad::cx_abs2(t, a);  // K x K received powers
  const int desired = t.diag_part(s);
  const int interference = t.sub(t.rowsum(s), desired);

  int den = t.add_const(interference, sigma2);
  if (N >= 1) {
    // C_x = W W^H as (re, im) planes.
    const int wre_t = t.transpose(w.re);
    const int wim_t = t.transpose(w.im);
    const Cx cx = {t.add(t.matmul(w.re, wre_t), t.matmul(w.im, wim_t)),
                   t.sub(t.matmul(w.im, wre_t), t.matmul(w.re, wim_t))};
    const int a2 = ad::cx_abs2(t, cx);  // |C_x|^2 elementwise

    Cx ce{-1, -1};
    for (int n = 1; n <= N; ++n) {
      std::vector<cplx> lc(static_cast<std::size_t>(N - n) + 1);
      for (int l = n; l <= N; ++l)
        lc[static_cast<std::size_t>(l - n)] = bussgang::binom(l, n) * bussgang::factorial(l + 1) *
                                              pa.coeffs[static_cast<std::size_t>(l)] /
                                              std::sqrt(static_cast<double>(n + 1));
      const Cx ln = poly_in_p(t, p, lc);
      const Cx on = outer_self(t, ln);
      const int a2n = n == 1 ? a2 : t.power_int(a2, n);
      const Cx tn = ad::cx_scale_real(t, cx, a2n);
      const Cx term = ad::cx_hadamard(t, on, tn);
      ce = (ce.re < 0) ? term : ad::cx_add(t, ce, term);
    }

    // Received distortion power h_k^T C_e h_k^*.
    const Cx hconj_node = ad::cx_leaf(t, h.conjugate());
    const Cx d = ad::cx_matmul(t, ad::cx_matmul(t, ht_node, ce), hconj_node);
    den = t.add(den, t.diag_part(d.re));
  }

  const int snidr = t.hadamard(desired, t.reciprocal(den));
  (void)M;
  return t.reduce_sum(t.log2_op(t.add_const(snidr, 1.0)));
}

Cx normalize_power_node(Tape& t, Cx w, double p_t) {
  const int tr = t.reduce_sum(ad::cx_abs2(t, w));
  if (!(t.val(tr)(0, 0) > 0.0))
    fail(Errc::zero_matrix, "cannot power-normalize an all-zero precoder");
  const int alpha = t.sqrt_op(t.scale(t.reciprocal(tr), p_t));
  return {t.scalar_mul(alpha, w.re), t.scalar_mul(alpha, w.im)};
}

namespace {

// Complex pairwise block product.
Cx cx_block_matmul(Tape& t, Cx a, Cx b, int nblocks) {
  return {t.sub(t.block_matmul(a.re, b.re, nblocks), t.block_matmul(a.im, b.im, nblocks)),
          t.add(t.block_matmul(a.re, b.im, nblocks), t.block_matmul(a.im, b.re, nblocks))};
}

}  // namespace

int sum_rate_node_blocks(Tape& t, Cx w_blocks, const std::vector<const CMat*>& hs,
                         const pa::PolynomialPa& pa, const double* sigma2, double p_t) {
  const int B = static_cast<int>(hs.size());
  require(B > 0, Errc::invalid_dimensions, "empty batch");
  const int M = static_cast<int>(hs[0]->rows());
  const int K = static_cast<int>(hs[0]->cols());
  require(t.val(w_blocks.re).rows() == M &&
              t.val(w_blocks.re).cols() == static_cast<Eigen::Index>(B) * K,
          Errc::dimension_mismatch, "precoder blocks and channels disagree");
  const int N = pa.order_index();

  // Block reduction / expansion indicators and per-sample constants.
  Mat red_k = Mat::Zero(static_cast<Eigen::Index>(B) * K, B);
  Mat mask_diag = Mat::Zero(K, static_cast<Eigen::Index>(B) * K);
  Mat sig(K, B);
  CMat ht(K, static_cast<Eigen::Index>(B) * M);
  CMat hc(M, static_cast<Eigen::Index>(B) * K);
  for (int b = 0; b < B; ++b) {
    require(hs[static_cast<std::size_t>(b)]->rows() == M &&
                hs[static_cast<std::size_t>(b)]->cols() == K,
            Errc::dimension_mismatch, "batch channels must share dimensions");
    red_k.block(static_cast<Eigen::Index>(b) * K, b, K, 1).setOnes();
    for (int k = 0; k < K; ++k) mask_diag(k, static_cast<Eigen::Index>(b) * K + k) = 1.0;
    sig.col(b).setConstant(sigma2[b]);
    ht.middleCols(static_cast<Eigen::Index>(b) * M, M) =
        hs[static_cast<std::size_t>(b)]->transpose();
    hc.middleCols(static_cast<Eigen::Index>(b) * K, K) =
        hs[static_cast<std::size_t>(b)]->conjugate();
  }
  const int red_k_id = t.leaf(red_k);
  const int exp_k_id = t.leaf(red_k.transpose());
  const int mask_diag_id = t.leaf(mask_diag);
  const Cx ht_node = ad::cx_leaf(t, ht);

  // Per-sample power normalization.
  const int tr = t.matmul(t.colsum(ad::cx_abs2(t, w_blocks)), red_k_id);  // 1 x B
  for (int b = 0; b < B; ++b)
    if (!(t.val(tr)(0, b) > 0.0))
      fail(Errc::zero_matrix, "cannot power-normalize an all-zero precoder");
  const int alpha = t.sqrt_op(t.scale(t.reciprocal(tr), p_t));
  const int alpha_cols = t.bcast_row(t.matmul(alpha, exp_k_id), M);  // M x B*K
  const Cx wn = {t.hadamard(w_blocks.re, alpha_cols), t.hadamard(w_blocks.im, alpha_cols)};

  // Per-antenna input powers p (M x B) and the Bussgang gains.
  const int p = t.matmul(ad::cx_abs2(t, wn), red_k_id);
  std::vector<cplx> gain_coeff(static_cast<std::size_t>(N) + 1);
  for (int n = 0; n <= N; ++n)
    gain_coeff[static_cast<std::size_t>(n)] =
        bussgang::factorial(n + 1) * pa.coeffs[static_cast<std::size_t>(n)];
  const Cx g = poly_in_p(t, p, gain_coeff);

  const Cx g_cols = {t.matmul(g.re, exp_k_id), t.matmul(g.im, exp_k_id)};
  const Cx gw = {t.sub(t.hadamard(g_cols.re, wn.re), t.hadamard(g_cols.im, wn.im)),
                 t.add(t.hadamard(g_cols.re, wn.im), t.hadamard(g_cols.im, wn.re))};

  const Cx a = cx_block_matmul(t, ht_node, gw, B);  // K x B*K
  const int s = ad::cx_abs2(t, a);
  const int desired = t.matmul(t.hadamard(s, mask_diag_id), red_k_id);     // K x B
  const int interference = t.sub(t.matmul(s, red_k_id), desired);

  int den = t.add(interference, t.leaf(sig));
  if (N >= 1) {
    // C_x = W W^H per block (M x B*M).
    const Cx wn_h = ad::cx_conj(t, {t.block_transpose(wn.re, B), t.block_transpose(wn.im, B)});
    const Cx cx = cx_block_matmul(t, wn, wn_h, B);
    const int a2 = ad::cx_abs2(t, cx);

    Cx ce{-1, -1};
    for (int n = 1; n <= N; ++n) {
      std::vector<cplx> lc(static_cast<std::size_t>(N - n) + 1);
      for (int l = n; l <= N; ++l)
        lc[static_cast<std::size_t>(l - n)] = bussgang::binom(l, n) * bussgang::factorial(l + 1) *
                                              pa.coeffs[static_cast<std::size_t>(l)] /
                                              std::sqrt(static_cast<double>(n + 1));
      const Cx ln = poly_in_p(t, p, lc);  // M x B, one column per sample
      const Cx ln_h =
          ad::cx_conj(t, {t.block_transpose(ln.re, B), t.block_transpose(ln.im, B)});
      const Cx on = cx_block_matmul(t, ln, ln_h, B);  // rank-1 per block
      const int a2n = n == 1 ? a2 : t.power_int(a2, n);
      const Cx tn = ad::cx_scale_real(t, cx, a2n);
      const Cx term = ad::cx_hadamard(t, on, tn);
      ce = (ce.re < 0) ? term : ad::cx_add(t, ce, term);
    }

    const Cx hc_node = ad::cx_leaf(t, hc);
    const Cx d = cx_block_matmul(t, cx_block_matmul(t, ht_node, ce, B), hc_node, B);
    const int dist = t.matmul(t.hadamard(d.re, mask_diag_id), red_k_id);  // K x B
    den = t.add(den, dist);
  }

  const int snidr = t.hadamard(desired, t.reciprocal(den));
  return t.reduce_sum(t.log2_op(t.add_const(snidr, 1.0)));
}

}  // namespace nlprecode::rate_graph
