#include "vsdn/sde.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vsdn/errors.hpp"

namespace vsdn {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

int TimeGrid::node_of_obs(int n) const {
  auto it = obs_index.find(n);
  if (it == obs_index.end()) throw ContractViolation("TimeGrid: unknown observation index");
  return it->second;
}

int TimeGrid::obs_at_node(int node) const {
  if (node_to_obs_.empty()) {
    node_to_obs_.assign(nodes.size(), -1);
    for (const auto& [n, j] : obs_index) node_to_obs_[static_cast<std::size_t>(j)] = n;
  }
  return node_to_obs_[static_cast<std::size_t>(node)];
}

int TimeGrid::node_of_time(double t) const {
  if (time_to_node_.empty())
    for (int j = 0; j < size(); ++j) time_to_node_[nodes[static_cast<std::size_t>(j)]] = j;
  auto it = time_to_node_.find(t);
  return it == time_to_node_.end() ? -1 : it->second;
}

void TimeGrid::validate() const {
  if (nodes.size() < 1 || nodes.front() != 0.0)
    throw ContractViolation("TimeGrid: must start at 0");
  if (dt_values.size() + 1 != nodes.size()) throw ContractViolation("TimeGrid: dt size");
  for (std::size_t i = 0; i < dt_values.size(); ++i) {
    if (!(dt_values[i] > 0.0)) throw ContractViolation("TimeGrid: nonpositive interval");
    if (dt_values[i] > max_dt * (1.0 + 1e-12))
      throw ContractViolation("TimeGrid: interval exceeds max_dt");
  }
}

TimeGrid build_time_grid(const std::vector<double>& obs_times, double max_dt, double horizon,
                         const std::vector<double>& extra_times) {
  if (!(max_dt > 0.0)) throw ConfigError("build_time_grid: max_dt must be positive");
  if (!(horizon >= 0.0)) throw ConfigError("build_time_grid: negative horizon");
  for (std::size_t i = 0; i < obs_times.size(); ++i) {
    const double t = obs_times[i];
    if (t < 0.0 || t > horizon)
      throw IngestionError("build_time_grid: observation time outside [0, horizon]");
    if (i > 0 && !(t > obs_times[i - 1]))
      throw IngestionError("build_time_grid: observation times must be strictly ascending");
  }
  for (double t : extra_times)
    if (t < 0.0 || t > horizon)
      throw ContractViolation("build_time_grid: extra time outside [0, horizon]");

  // Anchor nodes: 0, horizon, observations, extras (deduplicated).
  std::vector<double> anchors;
  anchors.push_back(0.0);
  anchors.insert(anchors.end(), obs_times.begin(), obs_times.end());
  anchors.insert(anchors.end(), extra_times.begin(), extra_times.end());
  anchors.push_back(horizon);
  std::sort(anchors.begin(), anchors.end());
  anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());

  TimeGrid grid;
  grid.max_dt = max_dt;
  grid.nodes.push_back(anchors.front());
  for (std::size_t i = 0; i + 1 < anchors.size(); ++i) {
    const double a = anchors[i], b = anchors[i + 1];
    const double gap = b - a;
    const int parts = std::max(1, static_cast<int>(std::ceil(gap / max_dt - 1e-12)));
    for (int k = 1; k < parts; ++k)
      grid.nodes.push_back(a + gap * (static_cast<double>(k) / parts));
    grid.nodes.push_back(b);  // anchor kept exact
  }
  grid.dt_values.resize(grid.nodes.size() - 1);
  for (std::size_t i = 0; i + 1 < grid.nodes.size(); ++i)
    grid.dt_values[i] = grid.nodes[i + 1] - grid.nodes[i];

  // Observation times are anchor nodes, so exact lookup is safe.
  std::size_t j = 0;
  for (int n = 0; n < static_cast<int>(obs_times.size()); ++n) {
    while (j < grid.nodes.size() && grid.nodes[j] != obs_times[static_cast<std::size_t>(n)]) ++j;
    if (j == grid.nodes.size())
      throw ContractViolation("build_time_grid: lost an observation node");
    grid.obs_index[n] = static_cast<int>(j);
  }
  grid.validate();
  return grid;
}

// ---- plain-value forms ---------------------------------------------------

Eigen::VectorXd euler_step(const Eigen::VectorXd& x, const Eigen::VectorXd& drift,
                           const Eigen::VectorXd& diff, double dt, const Eigen::VectorXd& eps) {
  if (!(dt > 0.0)) throw ContractViolation("euler_step: dt must be positive");
  if ((diff.array() <= 0.0).any()) throw ContractViolation("euler_step: diffusion must be > 0");
  return x + drift * dt + (diff.array() * eps.array()).matrix() * std::sqrt(dt);
}

double transition_log_density(const Eigen::VectorXd& x_next, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& drift, const Eigen::VectorXd& diff,
                              double dt) {
  if (!(dt > 0.0)) throw ContractViolation("transition_log_density: dt must be positive");
  if ((diff.array() <= 0.0).any())
    throw ContractViolation("transition_log_density: variance must be positive");
  const Eigen::ArrayXd var = dt * diff.array().square();
  const Eigen::ArrayXd resid = (x_next - x - drift * dt).array();
  return (-0.5 * (kLog2Pi + var.log()) - 0.5 * resid.square() / var).sum();
}

double kl_increment(const Eigen::VectorXd& h_q, const Eigen::VectorXd& h_g,
                    const Eigen::VectorXd& r_g, double dt) {
  if (!(dt > 0.0)) throw ContractViolation("kl_increment: dt must be positive");
  if ((r_g.array() <= 0.0).any())
    throw ContractViolation(
        "kl_increment: diffusion entry <= 0 (path KL diverges for non-shared diffusion)");
  return 0.5 * dt * ((h_q - h_g).array() / r_g.array()).square().sum();
}

double logw_increment(const Eigen::VectorXd& h_q, const Eigen::VectorXd& h_g,
                      const Eigen::VectorXd& r_g, double dt, const Eigen::VectorXd& eps) {
  const double kl = kl_increment(h_q, h_g, r_g, dt);
  const double ito =
      (((h_q - h_g).array() / r_g.array()) * eps.array()).sum() * std::sqrt(dt);
  return -kl - ito;
}

// ---- tape forms ------------------------------------------------------------

NodeId euler_step_node(Tape& t, NodeId x, NodeId drift, NodeId diff_row, double dt,
                       NodeId scaled_eps) {
  if (!(dt > 0.0)) throw ContractViolation("euler_step_node: dt must be positive");
  NodeId out = t.add(x, t.scale(drift, dt));
  return t.add(out, t.mul_row(scaled_eps, diff_row));
}

NodeId kl_increment_node(Tape& t, NodeId h_q, NodeId h_g, NodeId diff_inv_row, double dt) {
  NodeId u = t.mul_row(t.sub(h_q, h_g), diff_inv_row);
  return t.scale(t.row_sum(t.mul(u, u)), 0.5 * dt);
}

NodeId logw_increment_node(Tape& t, NodeId h_q, NodeId h_g, NodeId diff_inv_row, double dt,
                           NodeId scaled_eps) {
  NodeId u = t.mul_row(t.sub(h_q, h_g), diff_inv_row);
  NodeId kl = t.scale(t.row_sum(t.mul(u, u)), 0.5 * dt);
  NodeId ito = t.row_sum(t.mul(u, scaled_eps));
  return t.scale(t.add(kl, ito), -1.0);
}

double logsumexp(const std::vector<double>& v) {
  if (v.empty()) throw ContractViolation("logsumexp: empty input");
  const double mx = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace vsdn
