// Discretized SDE machinery: solver grid construction, Euler-Maruyama
// stepping, Gaussian transition densities, and the per-interval KL /
// log-importance-weight increments. Plain-value forms serve the oracles
// and tests; tape forms build the differentiable training graph.
//
// Diffusion is diagonal throughout, so [R R^T]^-1 is elementwise 1/r^2.
// Prior and posterior share the same diffusion; a non-shared diffusion
// makes the path KL infinite and is rejected at the contract level.
#pragma once

#include <map>
#include <vector>

#include "vsdn/tape.hpp"

namespace vsdn {

struct TimeGrid {
  std::vector<double> nodes;      // ascending, nodes[0] == 0
  std::vector<double> dt_values;  // nodes[i+1] - nodes[i], all > 0, <= max_dt
  std::map<int, int> obs_index;   // observation n -> grid node index
  double max_dt{0.0};

  int size() const { return static_cast<int>(nodes.size()); }
  int intervals() const { return static_cast<int>(dt_values.size()); }
  // observation n sits at which node (throws if unknown)
  int node_of_obs(int n) const;
  // -1 when the node carries no observation
  int obs_at_node(int node) const;
  int node_of_time(double t) const;  // exact match among nodes, -1 if absent

  void validate() const;

 private:
  mutable std::vector<int> node_to_obs_;  // lazily built inverse
  mutable std::map<double, int> time_to_node_;
};

// Union of {0, horizon}, obs_times and enough uniform subdivision points
// that no interval exceeds max_dt. extra_times (e.g. interpolation query
// times) become plain nodes without observation status.
TimeGrid build_time_grid(const std::vector<double>& obs_times, double max_dt, double horizon,
                         const std::vector<double>& extra_times = {});

// ---- plain-value forms -------------------------------------------------

// x + drift*dt + diff .* sqrt(dt) .* eps  (diagonal diffusion)
Eigen::VectorXd euler_step(const Eigen::VectorXd& x, const Eigen::VectorXd& drift,
                           const Eigen::VectorXd& diff, double dt, const Eigen::VectorXd& eps);

// log N(x_next | x + drift*dt, dt * diff^2), diagonal
double transition_log_density(const Eigen::VectorXd& x_next, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& drift, const Eigen::VectorXd& diff,
                              double dt);

// 0.5 * sum_j ((h_q - h_g)_j / r_j)^2 * dt   (>= 0, zero iff h_q == h_g)
double kl_increment(const Eigen::VectorXd& h_q, const Eigen::VectorXd& h_g,
                    const Eigen::VectorXd& r_g, double dt);

// -kl_increment - sum_j ((h_q - h_g)_j / r_j) * sqrt(dt) * eps_j, with eps
// the same draw that advanced the posterior path over this interval.
double logw_increment(const Eigen::VectorXd& h_q, const Eigen::VectorXd& h_g,
                      const Eigen::VectorXd& r_g, double dt, const Eigen::VectorXd& eps);

// ---- tape forms (row-batched: states are K x d, diffusion is 1 x d) -----

// scaled_eps must already carry the sqrt(dt) factor: sqrt(dt) * eps.
NodeId euler_step_node(Tape& t, NodeId x, NodeId drift, NodeId diff_row, double dt,
                       NodeId scaled_eps);

// K x 1 columns. diff_inv_row is exp(-s) where diff_row = exp(s).
NodeId kl_increment_node(Tape& t, NodeId h_q, NodeId h_g, NodeId diff_inv_row, double dt);
NodeId logw_increment_node(Tape& t, NodeId h_q, NodeId h_g, NodeId diff_inv_row, double dt,
                           NodeId scaled_eps);

// Numerically stable log(sum(exp(v))) over a plain vector.
double logsumexp(const std::vector<double>& v);

}  // namespace vsdn
