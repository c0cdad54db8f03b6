// Named parameter blocks with Adam state, the optimizer step, gradient
// clipping, and the central-difference gradient oracle used by tests.
#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "vsdn/tape.hpp"

namespace vsdn {

using GradMap = std::map<std::string, Mat>;

struct AdamHyper {
  double learning_rate{1e-4};
  double beta1{0.9};
  double beta2{0.999};
  double epsilon{1e-8};
  double weight_decay{0.0};  // decoupled: p -= lr * wd * p, kept out of the moments

  void validate() const;
};

class ParamStore {
 public:
  void add(const std::string& name, const Mat& init);
  bool has(const std::string& name) const { return values_.count(name) != 0; }
  const Mat& at(const std::string& name) const;
  Mat& at(const std::string& name);

  // Deterministic (lexicographic) iteration order.
  const std::map<std::string, Mat>& values() const { return values_; }
  std::map<std::string, Mat>& values() { return values_; }
  const Mat& adam_m(const std::string& name) const { return m_.at(name); }
  const Mat& adam_v(const std::string& name) const { return v_.at(name); }
  Mat& adam_m(const std::string& name) { return m_.at(name); }
  Mat& adam_v(const std::string& name) { return v_.at(name); }
  long step_count() const { return step_count_; }
  void set_step_count(long s) { step_count_ = s; }

  std::size_t total_size() const;

  // Flat views in lexicographic block order (used by the gradient oracle).
  std::vector<double> flatten() const;
  void unflatten(const std::vector<double>& flat);

 private:
  friend void adam_step(ParamStore&, const GradMap&, const AdamHyper&);
  std::map<std::string, Mat> values_, m_, v_;
  long step_count_{0};
};

// Standard Adam with bias correction and decoupled weight decay. Gradients
// for a subset of parameters are allowed (missing entries mean zero
// gradient, but weight decay still applies). Non-finite gradients raise
// TrainingFault naming the offending parameter.
void adam_step(ParamStore& store, const GradMap& grads, const AdamHyper& hyper);

// Scales grads in place so the global L2 norm is at most max_norm.
// Returns the pre-clip norm.
double clip_global_norm(GradMap& grads, double max_norm);

// In-place accumulate: dst[name] += src[name] (inserting missing keys).
void accumulate(GradMap& dst, const GradMap& src);

// d root / d p for every registered leaf; zero for leaves that do not
// influence root. Runs tape.backward(root).
GradMap backward(Tape& tape, NodeId root, const std::map<std::string, NodeId>& leaves);

// Central finite differences (f(x + h e_i) - f(x - h e_i)) / 2h. f must be
// deterministic (freeze any RNG draws). Raises OracleFailure with the
// coordinate index if an evaluation is non-finite.
std::vector<double> finite_diff_oracle(const std::function<double(const std::vector<double>&)>& f,
                                       const std::vector<double>& x, double h);

}  // namespace vsdn
