#include "nlprecode/autodiff.hpp"

#include <cmath>

namespace nlprecode::ad {

namespace {

void check_same_shape(const Mat& x, const Mat& y, const char* what) {
  require(x.rows() == y.rows() && x.cols() == y.cols(), Errc::shape_mismatch, what);
}

}  // namespace

int Tape::push(Node&& n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(const Mat& v, bool needs_grad) {
  Node n;
  n.op = Op::leaf;
  n.val = v;
  n.needs_grad = needs_grad;
  const int id = push(std::move(n));
  if (needs_grad) grad_leaves_.push_back(id);
  return id;
}

int Tape::add(int a, int b) {
  Node n;
  n.op = Op::add;
  n.a = a;
  n.b = b;
  check_same_shape(val(a), val(b), "add");
  n.val = val(a) + val(b);
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  return push(std::move(n));
}

int Tape::add3(int a, int b, int c) {
  Node n;
  n.op = Op::add3;
  n.a = a;
  n.b = b;
  n.d = c;
  check_same_shape(val(a), val(b), "add3");
  check_same_shape(val(a), val(c), "add3");
  n.val = val(a) + val(b) + val(c);
  n.needs_grad = at(a).needs_grad || at(b).needs_grad || at(c).needs_grad;
  return push(std::move(n));
}

int Tape::sub(int a, int b) {
  Node n;
  n.op = Op::sub;
  n.a = a;
  n.b = b;
  check_same_shape(val(a), val(b), "sub");
  n.val = val(a) - val(b);
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  return push(std::move(n));
}

int Tape::neg(int a) {
  Node n;
  n.op = Op::neg;
  n.a = a;
  n.val = -val(a);
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

int Tape::hadamard(int a, int b) {
  Node n;
  n.op = Op::hadamard;
  n.a = a;
  n.b = b;
  check_same_shape(val(a), val(b), "hadamard");
  n.val = val(a).cwiseProduct(val(b));
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  return push(std::move(n));
}

int Tape::matmul(int a, int b) {
  Node n;
  n.op = Op::matmul;
  n.a = a;
  n.b = b;
  require(val(a).cols() == val(b).rows(), Errc::shape_mismatch, "matmul");
  n.val.noalias() = val(a) * val(b);
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  return push(std::move(n));
}

int Tape::transpose(int a) {
  Node n;
  n.op = Op::transpose;
  n.a = a;
  n.val = val(a).transpose();
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

int Tape::scale(int a, double c) {
  Node n;
  n.op = Op::scale;
  n.a = a;
  n.c = c;
  n.val = c * val(a);
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

int Tape::add_const(int a, double c) {
  Node n;
  n.op = Op::add_const;
  n.a = a;
  n.c = c;
  n.val = val(a).array() + c;
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

int Tape::power_int(int a, int p) {
  require(p >= 1, Errc::shape_mismatch, "power_int exponent must be >= 1");
  Node n;
  n.op = Op::power_int;
  n.a = a;
  n.i0 = p;
  n.val = val(a);
  for (int i = 1; i < p; ++i) n.val = n.val.cwiseProduct(val(a));
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

int Tape::reciprocal(int a) {
  Node n;
  n.op = Op::reciprocal;
  n.a = a;
  n.val = val(a).cwiseInverse();
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

int Tape::sqrt_op(int a) {
  Node n;
  n.op = Op::sqrt_op;
  n.a = a;
  n.val = val(a).cwiseSqrt();
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

int Tape::log2_op(int a) {
  Node n;
  n.op = Op::log2_op;
  n.a = a;
  n.val = val(a).array().log() / M_LN2;
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

int Tape::reduce_sum(int a) {
  Node n;
  n.op = Op::reduce_sum;
  n.a = a;
  n.val = Mat::Constant(1, 1, val(a).sum());
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

int Tape::rowsum(int a) {
  Node n;
  n.op = Op::rowsum;
  n.a = a;
  n.val = val(a).rowwise().sum();
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

int Tape::colsum(int a) {
  Node n;
  n.op = Op::colsum;
  n.a = a;
  n.val = val(a).colwise().sum();
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

int Tape::diag_part(int a) {
  require(val(a).rows() == val(a).cols(), Errc::shape_mismatch, "diag_part needs square input");
  Node n;
  n.op = Op::diag_part;
  n.a = a;
  n.val = val(a).diagonal();
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

int Tape::bcast_col(int a, int ncols) {
  require(val(a).cols() == 1, Errc::shape_mismatch, "bcast_col needs a column vector");
  Node n;
  n.op = Op::bcast_col;
  n.a = a;
  n.i0 = ncols;
  n.val = val(a).replicate(1, ncols);
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

int Tape::bcast_row(int a, int nrows) {
  require(val(a).rows() == 1, Errc::shape_mismatch, "bcast_row needs a row vector");
  Node n;
  n.op = Op::bcast_row;
  n.a = a;
  n.i0 = nrows;
  n.val = val(a).replicate(nrows, 1);
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

int Tape::scalar_mul(int s, int x) {
  require(val(s).size() == 1, Errc::shape_mismatch, "scalar_mul needs a 1x1 scalar node");
  Node n;
  n.op = Op::scalar_mul;
  n.a = s;
  n.b = x;
  n.val = val(s)(0, 0) * val(x);
  n.needs_grad = at(s).needs_grad || at(x).needs_grad;
  return push(std::move(n));
}

int Tape::leaky_relu(int a, double slope) {
  Node n;
  n.op = Op::leaky_relu;
  n.a = a;
  n.c = slope;
  n.val = val(a).unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

int Tape::take_row_reshape(int a, int row, int M, int K, int col_offset) {
  require(row >= 0 && row < val(a).rows() &&
              val(a).cols() >= col_offset + static_cast<Eigen::Index>(M) * K,
          Errc::shape_mismatch, "take_row_reshape");
  Node n;
  n.op = Op::take_row_reshape;
  n.a = a;
  n.i0 = row;
  n.i1 = K;
  n.i2 = col_offset;
  n.val.resize(M, K);
  for (int m = 0; m < M; ++m)
    for (int k = 0; k < K; ++k) n.val(m, k) = val(a)(row, col_offset + m * K + k);
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

int Tape::matmul_blocks(int a, int p) {
  const Eigen::Index w = val(p).cols();
  require(val(p).rows() == w && w > 0 && val(a).cols() % w == 0, Errc::shape_mismatch,
          "matmul_blocks needs square P dividing A's columns");
  require(!at(p).needs_grad, Errc::shape_mismatch, "matmul_blocks treats P as a constant");
  Node n;
  n.op = Op::matmul_blocks;
  n.a = a;
  n.b = p;
  n.val.resize(val(a).rows(), val(a).cols());
  for (Eigen::Index c = 0; c < val(a).cols(); c += w)
    n.val.middleCols(c, w).noalias() = val(a).middleCols(c, w) * val(p);
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

int Tape::block_transpose(int a, int nblocks) {
  const Eigen::Index r = val(a).rows();
  require(nblocks > 0 && val(a).cols() % nblocks == 0, Errc::shape_mismatch, "block_transpose");
  const Eigen::Index c = val(a).cols() / nblocks;
  Node n;
  n.op = Op::block_transpose;
  n.a = a;
  n.i0 = nblocks;
  n.val.resize(c, static_cast<Eigen::Index>(nblocks) * r);
  for (int b = 0; b < nblocks; ++b)
    n.val.middleCols(static_cast<Eigen::Index>(b) * r, r) =
        val(a).middleCols(static_cast<Eigen::Index>(b) * c, c).transpose();
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

int Tape::block_matmul(int a, int b, int nblocks) {
  require(nblocks > 0 && val(a).cols() % nblocks == 0 && val(b).cols() % nblocks == 0,
          Errc::shape_mismatch, "block_matmul column counts");
  const Eigen::Index ca = val(a).cols() / nblocks;
  const Eigen::Index cb = val(b).cols() / nblocks;
  require(val(b).rows() == ca, Errc::shape_mismatch, "block_matmul inner dimension");
  Node n;
  n.op = Op::block_matmul;
  n.a = a;
  n.b = b;
  n.i0 = nblocks;
  n.val.resize(val(a).rows(), static_cast<Eigen::Index>(nblocks) * cb);
  for (int blk = 0; blk < nblocks; ++blk)
    n.val.middleCols(static_cast<Eigen::Index>(blk) * cb, cb).noalias() =
        val(a).middleCols(static_cast<Eigen::Index>(blk) * ca, ca) *
        val(b).middleCols(static_cast<Eigen::Index>(blk) * cb, cb);
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  return push(std::move(n));
}

int Tape::take_row_blocks(int a, int row, int M, int K, int nblocks) {
  require(row >= 0 && row < val(a).rows() &&
              val(a).cols() == static_cast<Eigen::Index>(nblocks) * M * K,
          Errc::shape_mismatch, "take_row_blocks");
  Node n;
  n.op = Op::take_row_blocks;
  n.a = a;
  n.i0 = row;
  n.i1 = K;
  n.i2 = nblocks;
  n.val.resize(M, static_cast<Eigen::Index>(nblocks) * K);
  for (int b = 0; b < nblocks; ++b)
    for (int m = 0; m < M; ++m)
      for (int k = 0; k < K; ++k)
        n.val(m, static_cast<Eigen::Index>(b) * K + k) = val(a)(row, (b * M + m) * K + k);
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

void Tape::accumulate(int id, const Mat& g) {
  Node& n = at(id);
  if (!n.needs_grad) return;
  if (!n.grad_live) {
    n.grad = g;
    n.grad_live = true;
  } else {
    n.grad += g;
  }
}

Mat Tape::grad_of(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad_live) return n.grad;
  return Mat::Zero(n.val.rows(), n.val.cols());
}

void Tape::backward(int loss_id) {
  require(val(loss_id).size() == 1, Errc::shape_mismatch, "backward needs a 1x1 loss");
  for (Node& n : nodes_) n.grad_live = false;
  accumulate(loss_id, Mat::Constant(1, 1, 1.0));

  // Writes an Eigen expression straight into the target's gradient buffer;
  // the first touch assigns, later touches accumulate.
  auto acc_expr = [this](int id, const auto& expr) {
    Node& nn = at(id);
    if (!nn.needs_grad) return;
    if (!nn.grad_live) {
      nn.grad.resize(nn.val.rows(), nn.val.cols());
      nn.grad = expr;
      nn.grad_live = true;
    } else {
      nn.grad += expr;
    }
  };
  auto acc_prod = [this](int id, const auto& expr) {
    Node& nn = at(id);
    if (!nn.needs_grad) return;
    if (!nn.grad_live) {
      nn.grad.resize(nn.val.rows(), nn.val.cols());
      nn.grad.noalias() = expr;
      nn.grad_live = true;
    } else {
      nn.grad.noalias() += expr;
    }
  };

  for (int id = loss_id; id >= 0; --id) {
    Node& n = at(id);
    if (!n.grad_live || !n.needs_grad) continue;
    const Mat& g = n.grad;
    switch (n.op) {
      case Op::leaf:
        break;
      case Op::add:
        acc_expr(n.a, g);
        acc_expr(n.b, g);
        break;
      case Op::add3:
        acc_expr(n.a, g);
        acc_expr(n.b, g);
        acc_expr(n.d, g);
        break;
      case Op::sub:
        acc_expr(n.a, g);
        acc_expr(n.b, -g);
        break;
      case Op::neg:
        acc_expr(n.a, -g);
        break;
      case Op::hadamard:
        acc_expr(n.a, g.cwiseProduct(val(n.b)));
        acc_expr(n.b, g.cwiseProduct(val(n.a)));
        break;
      case Op::matmul:
        acc_prod(n.a, g * val(n.b).transpose());
        acc_prod(n.b, val(n.a).transpose() * g);
        break;
      case Op::transpose:
        acc_expr(n.a, g.transpose());
        break;
      case Op::scale:
        acc_expr(n.a, n.c * g);
        break;
      case Op::add_const:
        acc_expr(n.a, g);
        break;
      case Op::power_int: {
        const int p = n.i0;
        Mat d = Mat::Constant(val(n.a).rows(), val(n.a).cols(), static_cast<double>(p));
        for (int i = 1; i < p; ++i) d = d.cwiseProduct(val(n.a));
        acc_expr(n.a, g.cwiseProduct(d));
        break;
      }
      case Op::reciprocal:
        acc_expr(n.a, -g.cwiseProduct(n.val).cwiseProduct(n.val));
        break;
      case Op::sqrt_op:
        acc_expr(n.a, (g.array() * 0.5 / n.val.array()).matrix());
        break;
      case Op::log2_op:
        acc_expr(n.a, (g.array() / (val(n.a).array() * M_LN2)).matrix());
        break;
      case Op::reduce_sum:
        acc_expr(n.a, Mat::Constant(val(n.a).rows(), val(n.a).cols(), g(0, 0)));
        break;
      case Op::rowsum:
        acc_expr(n.a, g.replicate(1, val(n.a).cols()));
        break;
      case Op::colsum:
        acc_expr(n.a, g.replicate(val(n.a).rows(), 1));
        break;
      case Op::diag_part: {
        Node& na = at(n.a);
        if (!na.needs_grad) break;
        if (!na.grad_live) {
          na.grad = Mat::Zero(na.val.rows(), na.val.cols());
          na.grad_live = true;
        }
        na.grad.diagonal() += g.col(0);
        break;
      }
      case Op::bcast_col:
        acc_expr(n.a, g.rowwise().sum());
        break;
      case Op::bcast_row:
        acc_expr(n.a, g.colwise().sum());
        break;
      case Op::scalar_mul:
        if (at(n.a).needs_grad)
          acc_expr(n.a, Mat::Constant(1, 1, g.cwiseProduct(val(n.b)).sum()));
        acc_expr(n.b, val(n.a)(0, 0) * g);
        break;
      case Op::leaky_relu: {
        const double slope = n.c;
        acc_expr(n.a, g.cwiseProduct(val(n.a).unaryExpr(
                          [slope](double v) { return v > 0.0 ? 1.0 : slope; })));
        break;
      }
      case Op::take_row_reshape: {
        Node& na = at(n.a);
        if (!na.needs_grad) break;
        if (!na.grad_live) {
          na.grad = Mat::Zero(na.val.rows(), na.val.cols());
          na.grad_live = true;
        }
        const int M = static_cast<int>(n.val.rows());
        const int K = n.i1;
        for (int m = 0; m < M; ++m)
          for (int k = 0; k < K; ++k) na.grad(n.i0, n.i2 + m * K + k) += g(m, k);
        break;
      }
      case Op::matmul_blocks: {
        Node& na = at(n.a);
        if (!na.needs_grad) break;
        const Eigen::Index w = val(n.b).cols();
        if (!na.grad_live) {
          na.grad.resize(na.val.rows(), na.val.cols());
          for (Eigen::Index c = 0; c < na.val.cols(); c += w)
            na.grad.middleCols(c, w).noalias() = g.middleCols(c, w) * val(n.b).transpose();
          na.grad_live = true;
        } else {
          for (Eigen::Index c = 0; c < na.val.cols(); c += w)
            na.grad.middleCols(c, w).noalias() += g.middleCols(c, w) * val(n.b).transpose();
        }
        break;
      }
      case Op::block_transpose: {
        Node& na = at(n.a);
        if (!na.needs_grad) break;
        const int B = n.i0;
        const Eigen::Index r = na.val.rows();
        const Eigen::Index c = na.val.cols() / B;
        if (!na.grad_live) {
          na.grad.resize(na.val.rows(), na.val.cols());
          for (int b = 0; b < B; ++b)
            na.grad.middleCols(static_cast<Eigen::Index>(b) * c, c) =
                g.middleCols(static_cast<Eigen::Index>(b) * r, r).transpose();
          na.grad_live = true;
        } else {
          for (int b = 0; b < B; ++b)
            na.grad.middleCols(static_cast<Eigen::Index>(b) * c, c) +=
                g.middleCols(static_cast<Eigen::Index>(b) * r, r).transpose();
        }
        break;
      }
      case Op::block_matmul: {
        const int B = n.i0;
        const Eigen::Index ca = val(n.a).cols() / B;
        const Eigen::Index cb = val(n.b).cols() / B;
        Node& na = at(n.a);
        Node& nb = at(n.b);
        if (na.needs_grad) {
          if (!na.grad_live) {
            na.grad.resize(na.val.rows(), na.val.cols());
            for (int b = 0; b < B; ++b)
              na.grad.middleCols(b * ca, ca).noalias() =
                  g.middleCols(b * cb, cb) * val(n.b).middleCols(b * cb, cb).transpose();
            na.grad_live = true;
          } else {
            for (int b = 0; b < B; ++b)
              na.grad.middleCols(b * ca, ca).noalias() +=
                  g.middleCols(b * cb, cb) * val(n.b).middleCols(b * cb, cb).transpose();
          }
        }
        if (nb.needs_grad) {
          if (!nb.grad_live) {
            nb.grad.resize(nb.val.rows(), nb.val.cols());
            for (int b = 0; b < B; ++b)
              nb.grad.middleCols(b * cb, cb).noalias() =
                  val(n.a).middleCols(b * ca, ca).transpose() * g.middleCols(b * cb, cb);
            nb.grad_live = true;
          } else {
            for (int b = 0; b < B; ++b)
              nb.grad.middleCols(b * cb, cb).noalias() +=
                  val(n.a).middleCols(b * ca, ca).transpose() * g.middleCols(b * cb, cb);
          }
        }
        break;
      }
      case Op::take_row_blocks: {
        Node& na = at(n.a);
        if (!na.needs_grad) break;
        if (!na.grad_live) {
          na.grad = Mat::Zero(na.val.rows(), na.val.cols());
          na.grad_live = true;
        }
        const int M = static_cast<int>(n.val.rows());
        const int K = n.i1;
        const int B = n.i2;
        for (int b = 0; b < B; ++b)
          for (int m = 0; m < M; ++m)
            for (int k = 0; k < K; ++k)
              na.grad(n.i0, (b * M + m) * K + k) += g(m, static_cast<Eigen::Index>(b) * K + k);
        break;
      }
    }
  }
}

Cx cx_leaf(Tape& t, const CMat& v, bool needs_grad) {
  return {t.leaf(v.real(), needs_grad), t.leaf(v.imag(), needs_grad)};
}

CMat cx_val(const Tape& t, Cx a) {
  CMat out(t.val(a.re).rows(), t.val(a.re).cols());
  out.real() = t.val(a.re);
  out.imag() = t.val(a.im);
  return out;
}

Cx cx_add(Tape& t, Cx a, Cx b) { return {t.add(a.re, b.re), t.add(a.im, b.im)}; }

Cx cx_sub(Tape& t, Cx a, Cx b) { return {t.sub(a.re, b.re), t.sub(a.im, b.im)}; }

Cx cx_conj(Tape& t, Cx a) { return {a.re, t.neg(a.im)}; }

Cx cx_transpose(Tape& t, Cx a) { return {t.transpose(a.re), t.transpose(a.im)}; }

Cx cx_matmul(Tape& t, Cx a, Cx b) {
  // (ar + j ai)(br + j bi) = (ar br - ai bi) + j(ar bi + ai br)
  return {t.sub(t.matmul(a.re, b.re), t.matmul(a.im, b.im)),
          t.add(t.matmul(a.re, b.im), t.matmul(a.im, b.re))};
}

Cx cx_hadamard(Tape& t, Cx a, Cx b) {
  return {t.sub(t.hadamard(a.re, b.re), t.hadamard(a.im, b.im)),
          t.add(t.hadamard(a.re, b.im), t.hadamard(a.im, b.re))};
}

Cx cx_scale_real(Tape& t, Cx a, int real_factor) {
  return {t.hadamard(a.re, real_factor), t.hadamard(a.im, real_factor)};
}

int cx_abs2(Tape& t, Cx a) {
  return t.add(t.hadamard(a.re, a.re), t.hadamard(a.im, a.im));
}

double gradcheck(const std::function<int(Tape&, const std::vector<Mat>&)>& build,
                 const std::vector<Mat>& point, double delta) {
  Tape t;
  const int loss = build(t, point);
  t.backward(loss);
  require(t.grad_leaves().size() == point.size(), Errc::shape_mismatch,
          "gradcheck builder must create one needs_grad leaf per input");
  std::vector<Mat> ad_grads;
  ad_grads.reserve(point.size());
  for (int id : t.grad_leaves()) ad_grads.push_back(t.grad_of(id));

  double max_rel = 0.0;
  std::vector<Mat> p = point;
  for (std::size_t k = 0; k < point.size(); ++k) {
    for (Eigen::Index j = 0; j < point[k].size(); ++j) {
      const double orig = p[k](j);
      p[k](j) = orig + delta;
      Tape tp;
      const double fp = tp.val(build(tp, p))(0, 0);
      p[k](j) = orig - delta;
      Tape tm;
      const double fm = tm.val(build(tm, p))(0, 0);
      p[k](j) = orig;
      const double fd = (fp - fm) / (2.0 * delta);
      const double ag = ad_grads[k](j);
      const double denom = std::max(std::abs(fd), std::abs(ag));
      if (denom < 1e-10) continue;  // both effectively zero
      max_rel = std::max(max_rel, std::abs(ag - fd) / denom);
    }
  }
  return max_rel;
}

}  // namespace nlprecode::ad
