#include "vsdn/encoders.hpp"

#include <cmath>

#include "vsdn/errors.hpp"

namespace vsdn {

void MLPSpec::validate() const {
  if (widths.size() < 2) throw ConfigError("MLPSpec: need at least input and output widths");
  for (int w : widths)
    if (w < 1) throw ConfigError("MLPSpec: widths must be positive");
}

NodeId BoundParams::id(const std::string& name) const {
  auto it = ids.find(name);
  if (it == ids.end()) throw ContractViolation("BoundParams: unknown parameter " + name);
  return it->second;
}

BoundParams BoundParams::bind(Tape& tape, const ParamStore& store) {
  BoundParams p;
  p.tape = &tape;
  for (const auto& [name, value] : store.values()) p.ids[name] = tape.leaf(value);
  return p;
}

MLP::MLP(std::string prefix, MLPSpec spec) : prefix_(std::move(prefix)), spec_(std::move(spec)) {
  spec_.validate();
}

void MLP::register_params(ParamStore& store, Rng& init_rng) const {
  for (std::size_t l = 0; l + 1 < spec_.widths.size(); ++l) {
    const int in = spec_.widths[l], out = spec_.widths[l + 1];
    const double scale = std::sqrt(2.0 / static_cast<double>(in + out));
    Mat W(in, out);
    for (int i = 0; i < in; ++i)
      for (int j = 0; j < out; ++j) W(i, j) = scale * init_rng.normal();
    store.add(prefix_ + ".W" + std::to_string(l), W);
    store.add(prefix_ + ".b" + std::to_string(l), Mat::Zero(1, out));
  }
}

NodeId MLP::forward_linear(const BoundParams& p, NodeId x) const {
  Tape& t = *p.tape;
  if (t.value(x).cols() != spec_.widths.front())
    throw ContractViolation("MLP " + prefix_ + ": input width mismatch");
  NodeId h = x;
  for (std::size_t l = 0; l + 1 < spec_.widths.size(); ++l) {
    h = t.add_row(t.matmul(h, p.id(prefix_ + ".W" + std::to_string(l))),
                  p.id(prefix_ + ".b" + std::to_string(l)));
    const bool last = l + 2 == spec_.widths.size();
    if (!last) h = spec_.act == Activation::kTanh ? t.tanh(h) : t.relu(h);
  }
  return h;
}

NodeId MLP::forward(const BoundParams& p, NodeId x) const {
  NodeId h = forward_linear(p, x);
  if (spec_.out_act == OutputAct::kExp) h = p.tape->exp(h);
  return h;
}

GRUCell::GRUCell(std::string prefix, int input_width, int hidden_width)
    : prefix_(std::move(prefix)), in_w_(input_width), hid_w_(hidden_width) {
  if (in_w_ < 1 || hid_w_ < 1) throw ConfigError("GRUCell: widths must be positive");
}

void GRUCell::register_params(ParamStore& store, Rng& init_rng) const {
  const int in = in_w_ + hid_w_;
  const double scale = std::sqrt(2.0 / static_cast<double>(in + hid_w_));
  for (const char* gate : {"z", "r", "c"}) {
    Mat W(in, hid_w_);
    for (int i = 0; i < in; ++i)
      for (int j = 0; j < hid_w_; ++j) W(i, j) = scale * init_rng.normal();
    store.add(prefix_ + ".W" + gate, W);
    store.add(prefix_ + ".b" + gate, Mat::Zero(1, hid_w_));
  }
}

NodeId GRUCell::step(const BoundParams& p, NodeId h, NodeId input) const {
  Tape& t = *p.tape;
  if (t.value(input).cols() != in_w_ || t.value(h).cols() != hid_w_)
    throw ContractViolation("GRUCell " + prefix_ + ": width mismatch");
  NodeId xh = t.concat_cols(input, h);
  NodeId z = t.sigmoid(t.add_row(t.matmul(xh, p.id(prefix_ + ".Wz")), p.id(prefix_ + ".bz")));
  NodeId r = t.sigmoid(t.add_row(t.matmul(xh, p.id(prefix_ + ".Wr")), p.id(prefix_ + ".br")));
  NodeId xrh = t.concat_cols(input, t.mul(r, h));
  NodeId c = t.tanh(t.add_row(t.matmul(xrh, p.id(prefix_ + ".Wc")), p.id(prefix_ + ".bc")));
  // h' = (1-z).*h + z.*c = h + z.*(c - h)
  return t.add(h, t.mul(z, t.sub(c, h)));
}

SequenceEncoder::SequenceEncoder(std::string prefix, int data_dims, int feature_width,
                                 int mlp_hidden, Activation act)
    : prefix_(std::move(prefix)),
      data_dims_(data_dims),
      width_(feature_width),
      flow_(prefix_ + ".flow", MLPSpec{{feature_width, mlp_hidden, feature_width}, act}),
      cell_(prefix_ + ".cell", 2 * data_dims, feature_width) {}

void SequenceEncoder::register_params(ParamStore& store, Rng& init_rng) const {
  store.add(prefix_ + ".h0", Mat::Zero(1, width_));
  flow_.register_params(store, init_rng);
  cell_.register_params(store, init_rng);
}

Mat SequenceEncoder::observation_input(const TimeSeries& series, int n) {
  const int d = series.dims();
  Mat inp(1, 2 * d);
  for (int j = 0; j < d; ++j) {
    const bool obs = series.mask(n, j) == 1.0;
    inp(0, j) = obs ? series.values(n, j) : 0.0;  // exact zero-fill, mask-sound
    inp(0, d + j) = obs ? 1.0 : 0.0;
  }
  return inp;
}

void SequenceEncoder::encode_forward(const BoundParams& p, const TimeSeries& series,
                                     const TimeGrid& grid, EncoderOutput& out) const {
  Tape& t = *p.tape;
  if (static_cast<int>(grid.obs_index.size()) != series.frames())
    throw ContractViolation("encode_forward: grid does not match series");
  const int g = grid.size();
  out.pre.assign(static_cast<std::size_t>(g), -1);
  out.post.assign(static_cast<std::size_t>(g), -1);

  NodeId h = p.id(prefix_ + ".h0");
  for (int j = 0; j < g; ++j) {
    out.pre[static_cast<std::size_t>(j)] = h;  // before any update at this node
    const int n = grid.obs_at_node(j);
    if (n >= 0) {
      NodeId inp = t.constant(observation_input(series, n));
      h = cell_.step(p, h, inp);
      out.post[static_cast<std::size_t>(j)] = h;
    }
    if (j + 1 < g) {
      const double dt = grid.dt_values[static_cast<std::size_t>(j)];
      h = t.add(h, t.scale(flow_.forward(p, h), dt));
    }
  }
}

void SequenceEncoder::encode_backward(const BoundParams& p, const TimeSeries& series,
                                      const TimeGrid& grid, EncoderOutput& out) const {
  Tape& t = *p.tape;
  if (static_cast<int>(grid.obs_index.size()) != series.frames())
    throw ContractViolation("encode_backward: grid does not match series");
  const int g = grid.size();
  out.back.assign(static_cast<std::size_t>(g), -1);

  NodeId h = p.id(prefix_ + ".h0");
  for (int j = g - 1; j >= 0; --j) {
    const int n = grid.obs_at_node(j);
    if (n >= 0) {
      NodeId inp = t.constant(observation_input(series, n));
      h = cell_.step(p, h, inp);
    }
    out.back[static_cast<std::size_t>(j)] = h;  // update applied before emitting
    if (j > 0) {
      const double dt = grid.dt_values[static_cast<std::size_t>(j - 1)];
      h = t.add(h, t.scale(flow_.forward(p, h), dt));
    }
  }
}

}  // namespace vsdn
