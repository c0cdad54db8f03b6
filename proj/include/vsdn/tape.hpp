// Reverse-mode autodiff over matrix-valued nodes. One tape records one
// computation; nodes are appended in topological order so the backward
// pass is a single reverse sweep that visits each node at most once.
//
// The differentiable primitive set is fixed: add, multiply (elementwise),
// matrix product, tanh, relu, sigmoid, exp, log, softplus, logsumexp,
// sum, mean. The remaining ops (concat/slice/broadcast/row-sum/clamp and
// the row-broadcast variants of add/multiply) are structural: they move
// values around without introducing arithmetic beyond the fixed set.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "vsdn/errors.hpp"

namespace vsdn {

using Mat = Eigen::MatrixXd;
using NodeId = std::int32_t;

enum class Op : std::uint8_t {
  kConst,
  kLeaf,
  kAdd,
  kSub,
  kAddRow,        // (m x n) + broadcast (1 x n)
  kMul,           // elementwise
  kMulRow,        // (m x n) .* broadcast (1 x n)
  kScale,         // c0 * a
  kAddScalar,     // a + c0
  kMatMul,
  kTanh,
  kRelu,
  kSigmoid,
  kExp,
  kLog,
  kSoftplus,
  kLogSumExp,     // over all entries -> 1x1
  kSum,           // over all entries -> 1x1
  kMean,          // over all entries -> 1x1
  kRowSum,        // (m x n) -> (m x 1)
  kConcatCols,
  kSliceCols,     // i0 = first column, width = value.cols()
  kBroadcastRow,  // (1 x n) -> (i0 x n)
  kClamp,         // clamp to [c0, c1]; gradient passes inside the closed interval
};

struct DiffNode {
  Op op{Op::kConst};
  bool requires_grad{false};
  NodeId a{-1}, b{-1};
  double c0{0.0}, c1{0.0};
  std::int32_t i0{0};
  Mat value;
  Mat grad;
};

class Tape {
 public:
  explicit Tape(std::size_t reserve_hint = 0) { nodes_.reserve(reserve_hint); }

  // ---- node creation -------------------------------------------------
  NodeId constant(const Mat& v);
  NodeId constant(double v);
  NodeId leaf(const Mat& v);  // requires_grad

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId add_row(NodeId a, NodeId row);
  NodeId mul(NodeId a, NodeId b);
  NodeId mul_row(NodeId a, NodeId row);
  NodeId scale(NodeId a, double c);
  NodeId add_scalar(NodeId a, double c);
  NodeId matmul(NodeId a, NodeId b);
  NodeId tanh(NodeId a);
  NodeId relu(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId exp(NodeId a);
  NodeId log(NodeId a);
  NodeId softplus(NodeId a);
  NodeId logsumexp(NodeId a);
  NodeId sum(NodeId a);
  NodeId mean(NodeId a);
  NodeId row_sum(NodeId a);
  NodeId concat_cols(NodeId a, NodeId b);
  NodeId slice_cols(NodeId a, int first, int width);
  NodeId broadcast_row(NodeId a, int rows);
  NodeId clamp(NodeId a, double lo, double hi);

  // ---- access ---------------------------------------------------------
  const Mat& value(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  double scalar(NodeId id) const;
  const Mat& grad(NodeId id) const;
  bool requires_grad(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  std::size_t size() const { return count_; }

  // True when `ancestor` is reachable from `id` through recorded parents.
  bool depends_on(NodeId id, NodeId ancestor) const;

  // ---- backward -------------------------------------------------------
  // root must be scalar (1x1). Fills grad for every node with
  // requires_grad; nodes that do not influence root keep a zero gradient.
  void backward(NodeId root);

  // Logical reset; keeps node slots (and their matrix buffers) allocated so
  // a tape reused across same-shaped computations stops allocating.
  void reset() { count_ = 0; grads_ready_ = false; }

 private:
  DiffNode& push(Op op, NodeId a, NodeId b);
  NodeId last_id() const { return static_cast<NodeId>(count_ - 1); }

  std::vector<DiffNode> nodes_;
  std::size_t count_{0};
  bool grads_ready_{false};
};

}  // namespace vsdn
