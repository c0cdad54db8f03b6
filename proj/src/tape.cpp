#include "vsdn/tape.hpp"

#include <cmath>
#include <string>

namespace vsdn {

namespace {

inline void resize_like(Mat& m, Eigen::Index r, Eigen::Index c) {
  if (m.rows() != r || m.cols() != c) m.resize(r, c);
}

}  // namespace

DiffNode& Tape::push(Op op, NodeId a, NodeId b) {
  if (count_ == nodes_.size()) nodes_.emplace_back();
  DiffNode& n = nodes_[count_++];
  n.op = op;
  n.a = a;
  n.b = b;
  n.c0 = n.c1 = 0.0;
  n.i0 = 0;
  bool rg = false;
  if (a >= 0) rg = rg || nodes_[static_cast<std::size_t>(a)].requires_grad;
  if (b >= 0) rg = rg || nodes_[static_cast<std::size_t>(b)].requires_grad;
  n.requires_grad = (op == Op::kLeaf) || rg;
  grads_ready_ = false;
  return n;
}

NodeId Tape::constant(const Mat& v) {
  DiffNode& n = push(Op::kConst, -1, -1);
  n.value = v;
  return last_id();
}

NodeId Tape::constant(double v) {
  DiffNode& n = push(Op::kConst, -1, -1);
  resize_like(n.value, 1, 1);
  n.value(0, 0) = v;
  return last_id();
}

NodeId Tape::leaf(const Mat& v) {
  DiffNode& n = push(Op::kLeaf, -1, -1);
  n.value = v;
  return last_id();
}

#define VSDN_A nodes_[static_cast<std::size_t>(a)].value
#define VSDN_B nodes_[static_cast<std::size_t>(b)].value

NodeId Tape::add(NodeId a, NodeId b) {
  if (VSDN_A.rows() != VSDN_B.rows() || VSDN_A.cols() != VSDN_B.cols())
    throw ContractViolation("add: shape mismatch");
  DiffNode& n = push(Op::kAdd, a, b);
  n.value = VSDN_A + VSDN_B;
  return last_id();
}

NodeId Tape::sub(NodeId a, NodeId b) {
  if (VSDN_A.rows() != VSDN_B.rows() || VSDN_A.cols() != VSDN_B.cols())
    throw ContractViolation("sub: shape mismatch");
  DiffNode& n = push(Op::kSub, a, b);
  n.value = VSDN_A - VSDN_B;
  return last_id();
}

NodeId Tape::add_row(NodeId a, NodeId b) {
  if (VSDN_B.rows() != 1 || VSDN_A.cols() != VSDN_B.cols())
    throw ContractViolation("add_row: need (m x n) + (1 x n)");
  DiffNode& n = push(Op::kAddRow, a, b);
  n.value = VSDN_A.rowwise() + VSDN_B.row(0);
  return last_id();
}

NodeId Tape::mul(NodeId a, NodeId b) {
  if (VSDN_A.rows() != VSDN_B.rows() || VSDN_A.cols() != VSDN_B.cols())
    throw ContractViolation("mul: shape mismatch");
  DiffNode& n = push(Op::kMul, a, b);
  n.value = VSDN_A.cwiseProduct(VSDN_B);
  return last_id();
}

NodeId Tape::mul_row(NodeId a, NodeId b) {
  if (VSDN_B.rows() != 1 || VSDN_A.cols() != VSDN_B.cols())
    throw ContractViolation("mul_row: need (m x n) .* (1 x n)");
  DiffNode& n = push(Op::kMulRow, a, b);
  n.value = VSDN_A.array().rowwise() * VSDN_B.array().row(0);
  return last_id();
}

NodeId Tape::scale(NodeId a, double c) {
  DiffNode& n = push(Op::kScale, a, -1);
  n.c0 = c;
  n.value = c * VSDN_A;
  return last_id();
}

NodeId Tape::add_scalar(NodeId a, double c) {
  DiffNode& n = push(Op::kAddScalar, a, -1);
  n.c0 = c;
  n.value = VSDN_A.array() + c;
  return last_id();
}

NodeId Tape::matmul(NodeId a, NodeId b) {
  if (VSDN_A.cols() != VSDN_B.rows()) throw ContractViolation("matmul: inner dims differ");
  DiffNode& n = push(Op::kMatMul, a, b);
  resize_like(n.value, VSDN_A.rows(), VSDN_B.cols());
  n.value.noalias() = VSDN_A * VSDN_B;
  return last_id();
}

NodeId Tape::tanh(NodeId a) {
  DiffNode& n = push(Op::kTanh, a, -1);
  n.value = VSDN_A.array().tanh();
  return last_id();
}

NodeId Tape::relu(NodeId a) {
  DiffNode& n = push(Op::kRelu, a, -1);
  n.value = VSDN_A.cwiseMax(0.0);
  return last_id();
}

NodeId Tape::sigmoid(NodeId a) {
  DiffNode& n = push(Op::kSigmoid, a, -1);
  n.value = 0.5 * (0.5 * VSDN_A.array()).tanh() + 0.5;  // overflow-safe logistic
  return last_id();
}

NodeId Tape::exp(NodeId a) {
  DiffNode& n = push(Op::kExp, a, -1);
  n.value = VSDN_A.array().exp();
  return last_id();
}

NodeId Tape::log(NodeId a) {
  DiffNode& n = push(Op::kLog, a, -1);
  n.value = VSDN_A.array().log();
  return last_id();
}

NodeId Tape::softplus(NodeId a) {
  DiffNode& n = push(Op::kSoftplus, a, -1);
  n.value = VSDN_A.array().max(0.0) + (-VSDN_A.array().abs()).exp().log1p();
  return last_id();
}

NodeId Tape::logsumexp(NodeId a) {
  if (VSDN_A.size() == 0) throw ContractViolation("logsumexp: empty input");
  DiffNode& n = push(Op::kLogSumExp, a, -1);
  const double mx = VSDN_A.maxCoeff();
  resize_like(n.value, 1, 1);
  n.value(0, 0) = mx + std::log((VSDN_A.array() - mx).exp().sum());
  return last_id();
}

NodeId Tape::sum(NodeId a) {
  DiffNode& n = push(Op::kSum, a, -1);
  resize_like(n.value, 1, 1);
  n.value(0, 0) = VSDN_A.sum();
  return last_id();
}

NodeId Tape::mean(NodeId a) {
  if (VSDN_A.size() == 0) throw ContractViolation("mean: empty input");
  DiffNode& n = push(Op::kMean, a, -1);
  resize_like(n.value, 1, 1);
  n.value(0, 0) = VSDN_A.mean();
  return last_id();
}

NodeId Tape::row_sum(NodeId a) {
  DiffNode& n = push(Op::kRowSum, a, -1);
  n.value = VSDN_A.rowwise().sum();
  return last_id();
}

NodeId Tape::concat_cols(NodeId a, NodeId b) {
  if (VSDN_A.rows() != VSDN_B.rows()) throw ContractViolation("concat_cols: row counts differ");
  DiffNode& n = push(Op::kConcatCols, a, b);
  resize_like(n.value, VSDN_A.rows(), VSDN_A.cols() + VSDN_B.cols());
  n.value.leftCols(VSDN_A.cols()) = VSDN_A;
  n.value.rightCols(VSDN_B.cols()) = VSDN_B;
  return last_id();
}

NodeId Tape::slice_cols(NodeId a, int first, int width) {
  if (first < 0 || width <= 0 || first + width > VSDN_A.cols())
    throw ContractViolation("slice_cols: range out of bounds");
  DiffNode& n = push(Op::kSliceCols, a, -1);
  n.i0 = first;
  n.value = VSDN_A.middleCols(first, width);
  return last_id();
}

NodeId Tape::broadcast_row(NodeId a, int rows) {
  if (VSDN_A.rows() != 1) throw ContractViolation("broadcast_row: input must be a row");
  if (rows < 1) throw ContractViolation("broadcast_row: rows < 1");
  DiffNode& n = push(Op::kBroadcastRow, a, -1);
  n.i0 = rows;
  n.value = VSDN_A.replicate(rows, 1);
  return last_id();
}

NodeId Tape::clamp(NodeId a, double lo, double hi) {
  if (!(lo <= hi)) throw ContractViolation("clamp: lo > hi");
  DiffNode& n = push(Op::kClamp, a, -1);
  n.c0 = lo;
  n.c1 = hi;
  n.value = VSDN_A.cwiseMax(lo).cwiseMin(hi);
  return last_id();
}

#undef VSDN_A
#undef VSDN_B

double Tape::scalar(NodeId id) const {
  const Mat& v = value(id);
  if (v.size() != 1) throw ContractViolation("scalar: node is not 1x1");
  return v(0, 0);
}

const Mat& Tape::grad(NodeId id) const {
  if (!grads_ready_) throw ContractViolation("grad: backward() has not run");
  return nodes_[static_cast<std::size_t>(id)].grad;
}

bool Tape::depends_on(NodeId id, NodeId ancestor) const {
  if (id < ancestor) return false;
  std::vector<NodeId> stack{id};
  std::vector<bool> seen(static_cast<std::size_t>(id) + 1, false);
  while (!stack.empty()) {
    NodeId cur = stack.back();
    stack.pop_back();
    if (cur == ancestor) return true;
    if (cur < 0 || cur < ancestor || seen[static_cast<std::size_t>(cur)]) continue;
    seen[static_cast<std::size_t>(cur)] = true;
    const DiffNode& n = nodes_[static_cast<std::size_t>(cur)];
    if (n.a >= 0) stack.push_back(n.a);
    if (n.b >= 0) stack.push_back(n.b);
  }
  return false;
}

void Tape::backward(NodeId root) {
  const auto ir = static_cast<std::size_t>(root);
  if (root < 0 || ir >= count_) throw ContractViolation("backward: bad root id");
  if (nodes_[ir].value.size() != 1) throw ContractViolation("backward: root must be scalar");

  for (std::size_t i = 0; i <= ir; ++i) {
    DiffNode& n = nodes_[i];
    if (!n.requires_grad) continue;
    resize_like(n.grad, n.value.rows(), n.value.cols());
    n.grad.setZero();
  }
  if (nodes_[ir].requires_grad) nodes_[ir].grad(0, 0) = 1.0;

  for (std::size_t ii = ir + 1; ii-- > 0;) {
    DiffNode& n = nodes_[ii];
    if (!n.requires_grad || n.op == Op::kLeaf || n.op == Op::kConst) continue;
    const Mat& g = n.grad;
    DiffNode* pa = n.a >= 0 ? &nodes_[static_cast<std::size_t>(n.a)] : nullptr;
    DiffNode* pb = n.b >= 0 ? &nodes_[static_cast<std::size_t>(n.b)] : nullptr;
    const bool ga = pa && pa->requires_grad;
    const bool gb = pb && pb->requires_grad;
    switch (n.op) {
      case Op::kAdd:
        if (ga) pa->grad += g;
        if (gb) pb->grad += g;
        break;
      case Op::kSub:
        if (ga) pa->grad += g;
        if (gb) pb->grad -= g;
        break;
      case Op::kAddRow:
        if (ga) pa->grad += g;
        if (gb) pb->grad += g.colwise().sum();
        break;
      case Op::kMul:
        if (ga) pa->grad.array() += g.array() * pb->value.array();
        if (gb) pb->grad.array() += g.array() * pa->value.array();
        break;
      case Op::kMulRow:
        if (ga) pa->grad.array() += g.array().rowwise() * pb->value.array().row(0);
        if (gb) pb->grad.array() += (g.array() * pa->value.array()).colwise().sum();
        break;
      case Op::kScale:
        if (ga) pa->grad += n.c0 * g;
        break;
      case Op::kAddScalar:
        if (ga) pa->grad += g;
        break;
      case Op::kMatMul:
        if (ga) pa->grad.noalias() += g * pb->value.transpose();
        if (gb) pb->grad.noalias() += pa->value.transpose() * g;
        break;
      case Op::kTanh:
        if (ga) pa->grad.array() += g.array() * (1.0 - n.value.array().square());
        break;
      case Op::kRelu:
        if (ga) pa->grad.array() += g.array() * (pa->value.array() > 0.0).cast<double>();
        break;
      case Op::kSigmoid:
        if (ga) pa->grad.array() += g.array() * n.value.array() * (1.0 - n.value.array());
        break;
      case Op::kExp:
        if (ga) pa->grad.array() += g.array() * n.value.array();
        break;
      case Op::kLog:
        if (ga) pa->grad.array() += g.array() / pa->value.array();
        break;
      case Op::kSoftplus:
        if (ga)
          pa->grad.array() +=
              g.array() * (0.5 * (0.5 * pa->value.array()).tanh() + 0.5);
        break;
      case Op::kLogSumExp:
        if (ga) pa->grad.array() += g(0, 0) * (pa->value.array() - n.value(0, 0)).exp();
        break;
      case Op::kSum:
        if (ga) pa->grad.array() += g(0, 0);
        break;
      case Op::kMean:
        if (ga) pa->grad.array() += g(0, 0) / static_cast<double>(pa->value.size());
        break;
      case Op::kRowSum:
        if (ga) pa->grad.colwise() += g.col(0);
        break;
      case Op::kConcatCols:
        if (ga) pa->grad += g.leftCols(pa->value.cols());
        if (gb) pb->grad += g.rightCols(pb->value.cols());
        break;
      case Op::kSliceCols:
        if (ga) pa->grad.middleCols(n.i0, n.value.cols()) += g;
        break;
      case Op::kBroadcastRow:
        if (ga) pa->grad += g.colwise().sum();
        break;
      case Op::kClamp:
        if (ga)
          pa->grad.array() += g.array() * ((pa->value.array() >= n.c0) &&
                                           (pa->value.array() <= n.c1))
                                              .cast<double>();
        break;
      case Op::kConst:
      case Op::kLeaf:
        break;
    }
  }
  grads_ready_ = true;
}

}  // namespace vsdn
