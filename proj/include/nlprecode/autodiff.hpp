#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "nlprecode/types.hpp"

namespace nlprecode::ad {

// Reverse-mode engine over real dense matrices. Complex quantities are
// carried as (re, im) pairs of real nodes (see Cx below); the loss is always
// a real 1x1 node, so no Wirtinger calculus is needed.
//
// Recording is eager: every op computes its forward value immediately.
// backward() walks the tape once in reverse creation order.

enum class Op : std::uint8_t {
  leaf,
  add,
  sub,
  neg,
  hadamard,
  matmul,
  transpose,
  scale,       // c * x
  add_const,   // x + c
  power_int,   // elementwise x^n, n >= 1
  reciprocal,
  sqrt_op,
  log2_op,
  reduce_sum,  // -> 1x1
  rowsum,      // MxN -> Mx1
  colsum,      // MxN -> 1xN
  diag_part,   // NxN -> Nx1
  bcast_col,   // Mx1 -> MxN
  bcast_row,   // 1xN -> MxN
  scalar_mul,  // (1x1 node) * matrix node
  leaky_relu,
  take_row_reshape,  // row r of a feature block -> M x K, column e = m*K + k
  matmul_blocks,     // A * (I_B  (X)  P): per-block right-multiplication
  block_transpose,   // per-column-block transpose: (r x B*c) -> (c x B*r)
  block_matmul,      // pairwise block product: (ra x B*n) x (n x B*cb) -> (ra x B*cb)
  take_row_blocks,   // row r of (R x B*M*K) -> (M x B*K), block b col k = e b*MK+m*K+k
  add3,              // a + b + c in one pass
};

struct Node {
  Op op = Op::leaf;
  int a = -1;
  int b = -1;
  int d = -1;  // third input (add3 only)
  double c = 0.0;
  int i0 = 0;
  int i1 = 0;
  int i2 = 0;
  Mat val;
  Mat grad;
  bool needs_grad = false;
  bool grad_live = false;  // grad allocated and zeroed this backward pass
};

class Tape {
 public:
  int leaf(const Mat& v, bool needs_grad = false);
  int constant(double v) { return leaf(Mat::Constant(1, 1, v), false); }

  int add(int a, int b);
  int add3(int a, int b, int c);
  int sub(int a, int b);
  int neg(int a);
  int hadamard(int a, int b);
  int matmul(int a, int b);
  int transpose(int a);
  int scale(int a, double c);
  int add_const(int a, double c);
  int power_int(int a, int n);
  int reciprocal(int a);
  int sqrt_op(int a);
  int log2_op(int a);
  int reduce_sum(int a);
  int rowsum(int a);
  int colsum(int a);
  int diag_part(int a);
  int bcast_col(int a, int ncols);
  int bcast_row(int a, int nrows);
  int scalar_mul(int s, int x);
  int leaky_relu(int a, double slope);
  int take_row_reshape(int a, int row, int M, int K, int col_offset = 0);
  // C = A * (I_B (X) P) for square P; A has B column blocks of P's size.
  int matmul_blocks(int a, int p);
  // Per-block transpose of the B column blocks of a.
  int block_transpose(int a, int nblocks);
  // Pairwise products of the B column blocks of a and b.
  int block_matmul(int a, int b, int nblocks);
  // Row r of a (R x B*M*K) feature matrix as an (M x B*K) block matrix.
  int take_row_blocks(int a, int row, int M, int K, int nblocks);

  const Mat& val(int id) const { return nodes_[static_cast<std::size_t>(id)].val; }
  // Valid after backward(); zero matrix if the node was never reached.
  Mat grad_of(int id) const;

  // needs_grad leaves in creation order.
  const std::vector<int>& grad_leaves() const { return grad_leaves_; }

  void backward(int loss_id);
  void clear() {
    nodes_.clear();
    grad_leaves_.clear();
  }
  std::size_t size() const { return nodes_.size(); }

 private:
  int push(Node&& n);
  Node& at(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  void accumulate(int id, const Mat& g);

  std::vector<Node> nodes_;
  std::vector<int> grad_leaves_;
};

// Complex value as a pair of real nodes of identical shape.
struct Cx {
  int re = -1;
  int im = -1;
};

Cx cx_leaf(Tape& t, const CMat& v, bool needs_grad = false);
CMat cx_val(const Tape& t, Cx a);
Cx cx_add(Tape& t, Cx a, Cx b);
Cx cx_sub(Tape& t, Cx a, Cx b);
Cx cx_conj(Tape& t, Cx a);
Cx cx_transpose(Tape& t, Cx a);
Cx cx_matmul(Tape& t, Cx a, Cx b);
Cx cx_hadamard(Tape& t, Cx a, Cx b);
// complex elementwise product with a real factor
Cx cx_scale_real(Tape& t, Cx a, int real_factor);
int cx_abs2(Tape& t, Cx a);  // real node |a|^2 elementwise

// Max relative entry-wise error between the reverse-mode gradient of the
// scalar built by `build` and central finite differences at `point`.
// `build` must create one needs_grad leaf per input matrix, in order, and
// return the id of a 1x1 loss node.
double gradcheck(const std::function<int(Tape&, const std::vector<Mat>&)>& build,
                 const std::vector<Mat>& point, double delta);

}  // namespace nlprecode::ad
