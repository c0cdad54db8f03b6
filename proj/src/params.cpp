#include "vsdn/params.hpp"

#include <cmath>

#include "vsdn/errors.hpp"

namespace vsdn {

void AdamHyper::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("adam: learning_rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("adam: beta1 must be in (0,1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("adam: beta2 must be in (0,1)");
  if (!(epsilon > 0.0)) throw ConfigError("adam: epsilon must be positive");
  if (weight_decay < 0.0 || !std::isfinite(weight_decay))
    throw ConfigError("adam: weight_decay must be nonnegative");
}

void ParamStore::add(const std::string& name, const Mat& init) {
  if (has(name)) throw ContractViolation("ParamStore::add: duplicate parameter " + name);
  values_[name] = init;
  m_[name] = Mat::Zero(init.rows(), init.cols());
  v_[name] = Mat::Zero(init.rows(), init.cols());
}

const Mat& ParamStore::at(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw ContractViolation("ParamStore: unknown parameter " + name);
  return it->second;
}

Mat& ParamStore::at(const std::string& name) {
  auto it = values_.find(name);
  if (it == values_.end()) throw ContractViolation("ParamStore: unknown parameter " + name);
  return it->second;
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const auto& [k, v] : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

std::vector<double> ParamStore::flatten() const {
  std::vector<double> flat;
  flat.reserve(total_size());
  for (const auto& [k, v] : values_)
    flat.insert(flat.end(), v.data(), v.data() + v.size());
  return flat;
}

void ParamStore::unflatten(const std::vector<double>& flat) {
  if (flat.size() != total_size()) throw ContractViolation("unflatten: size mismatch");
  std::size_t off = 0;
  for (auto& [k, v] : values_) {
    std::copy(flat.begin() + static_cast<long>(off),
              flat.begin() + static_cast<long>(off) + v.size(), v.data());
    off += static_cast<std::size_t>(v.size());
  }
}

void adam_step(ParamStore& store, const GradMap& grads, const AdamHyper& hyper) {
  hyper.validate();
  for (const auto& [name, g] : grads) {
    if (!store.has(name)) throw ContractViolation("adam_step: unknown parameter " + name);
    const Mat& p = store.at(name);
    if (g.rows() != p.rows() || g.cols() != p.cols())
      throw ContractViolation("adam_step: shape mismatch for " + name);
    if (!g.allFinite()) throw TrainingFault("non-finite gradient for parameter " + name);
  }

  const long t = ++store.step_count_;
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(t));

  for (auto& [name, p] : store.values_) {
    Mat& m = store.m_[name];
    Mat& v = store.v_[name];
    auto git = grads.find(name);
    if (git != grads.end()) {
      const Mat& g = git->second;
      m = hyper.beta1 * m + (1.0 - hyper.beta1) * g;
      v = hyper.beta2 * v + (1.0 - hyper.beta2) * g.cwiseProduct(g);
    } else {
      m *= hyper.beta1;
      v *= hyper.beta2;
    }
    const Mat m_hat = m / bc1;
    const Mat v_hat = v / bc2;
    p.array() -= hyper.learning_rate * m_hat.array() / (v_hat.array().sqrt() + hyper.epsilon);
    if (hyper.weight_decay > 0.0)
      p.array() -= hyper.learning_rate * hyper.weight_decay * p.array();
  }
}

double clip_global_norm(GradMap& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw ConfigError("clip_global_norm: max_norm must be positive");
  double sq = 0.0;
  for (const auto& [k, g] : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& [k, g] : grads) g *= s;
  }
  return norm;
}

void accumulate(GradMap& dst, const GradMap& src) {
  for (const auto& [k, g] : src) {
    auto it = dst.find(k);
    if (it == dst.end())
      dst[k] = g;
    else
      it->second += g;
  }
}

GradMap backward(Tape& tape, NodeId root, const std::map<std::string, NodeId>& leaves) {
  tape.backward(root);
  GradMap out;
  for (const auto& [name, id] : leaves) out[name] = tape.grad(id);
  return out;
}

std::vector<double> finite_diff_oracle(
    const std::function<double(const std::vector<double>&)>& f, const std::vector<double>& x,
    double h) {
  if (!(h > 0.0)) throw ContractViolation("finite_diff_oracle: h must be positive");
  std::vector<double> grad(x.size());
  std::vector<double> probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw OracleFailure("finite_diff_oracle: non-finite evaluation at coordinate " +
                          std::to_string(i));
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace vsdn
