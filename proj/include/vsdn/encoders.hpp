// Recurrent feature extractors: feed-forward blocks, the gated recurrent
// update cell, and the forward/backward ODE-RNN encoders that produce the
// pre-observation, post-observation and backward hidden features.
//
// Hidden state flows between grid nodes by one Euler step of dh/dt = N(h)
// per interval and jumps through the gated cell at observation nodes.
// Forward features at node t depend on observations strictly before t
// (pre) or up to and including t (post); backward features at node t
// depend on observations at time >= t.
#pragma once

#include <string>
#include <vector>

#include "vsdn/datasets.hpp"
#include "vsdn/params.hpp"
#include "vsdn/sde.hpp"

namespace vsdn {

enum class Activation { kTanh, kRelu };
enum class OutputAct { kIdentity, kExp };

struct MLPSpec {
  std::vector<int> widths;  // input, hidden..., output
  Activation act{Activation::kTanh};
  OutputAct out_act{OutputAct::kIdentity};

  void validate() const;
};

// Parameter nodes bound into one tape (leaf ids by name).
struct BoundParams {
  Tape* tape{nullptr};
  std::map<std::string, NodeId> ids;

  NodeId id(const std::string& name) const;
  static BoundParams bind(Tape& tape, const ParamStore& store);
};

class MLP {
 public:
  MLP() = default;
  MLP(std::string prefix, MLPSpec spec);

  void register_params(ParamStore& store, Rng& init_rng) const;
  NodeId forward(const BoundParams& p, NodeId x) const;
  // Forward through all layers but without the exp output head (used where
  // the caller wants the pre-activation, e.g. log-diffusion).
  NodeId forward_linear(const BoundParams& p, NodeId x) const;

  const MLPSpec& spec() const { return spec_; }
  int in_width() const { return spec_.widths.front(); }
  int out_width() const { return spec_.widths.back(); }

 private:
  std::string prefix_;
  MLPSpec spec_;
};

// Standard reset/update/candidate gated cell:
//   z = sigmoid([x,h] Wz + bz), r = sigmoid([x,h] Wr + br)
//   c = tanh([x, r.*h] Wc + bc),  h' = (1-z).*h + z.*c
class GRUCell {
 public:
  GRUCell() = default;
  GRUCell(std::string prefix, int input_width, int hidden_width);

  void register_params(ParamStore& store, Rng& init_rng) const;
  NodeId step(const BoundParams& p, NodeId h, NodeId input) const;

  int input_width() const { return in_w_; }
  int hidden_width() const { return hid_w_; }

 private:
  std::string prefix_;
  int in_w_{0}, hid_w_{0};
};

struct EncoderOutput {
  std::vector<NodeId> pre;   // per grid node
  std::vector<NodeId> post;  // per grid node, -1 where no observation
  std::vector<NodeId> back;  // per grid node (smoothing only), else empty
};

// One direction of the ODE-RNN. prefix namespaces the parameters
// (prefix.h0, prefix.flow.*, prefix.cell.*).
class SequenceEncoder {
 public:
  SequenceEncoder() = default;
  SequenceEncoder(std::string prefix, int data_dims, int feature_width, int mlp_hidden,
                  Activation act);

  void register_params(ParamStore& store, Rng& init_rng) const;

  // pre/post features; series must match the grid's observation map.
  void encode_forward(const BoundParams& p, const TimeSeries& series, const TimeGrid& grid,
                      EncoderOutput& out) const;
  // back features on the time-reversed grid; the cell update applies
  // before the node's feature is emitted (closed lower bound t_n >= t).
  void encode_backward(const BoundParams& p, const TimeSeries& series, const TimeGrid& grid,
                       EncoderOutput& out) const;

  int feature_width() const { return width_; }

  // (masked values, mask bits) input row for observation n.
  static Mat observation_input(const TimeSeries& series, int n);

 private:
  std::string prefix_;
  int data_dims_{0}, width_{0};
  MLP flow_;
  GRUCell cell_;
};

}  // namespace vsdn
