// Sporadic time-series data: the canonical in-memory form, the synthetic
// double Ornstein-Uhlenbeck generator, frame/dimension dropout, CSV
// ingestion and emission, masked normalization, and seeded splits.
//
// Canonical form: unobserved cells are stored as exactly 0 and every row
// keeps at least one observed dimension. All statistics are masked.
#pragma once

#include <string>
#include <vector>

#include "vsdn/rng.hpp"

namespace vsdn {

struct NormStats {
  bool active{false};
  std::vector<double> mean, std;
};

struct TimeSeries {
  std::vector<double> times;  // strictly ascending
  Mat values;                 // n x d2, zero-filled where mask == 0
  Mat mask;                   // n x d2 in {0,1}
  NormStats norm;             // stats this series was normalized with

  int frames() const { return static_cast<int>(times.size()); }
  int dims() const { return static_cast<int>(values.cols()); }
  void validate() const;
  // Forces masked-out cells to zero (canonical form).
  void canonicalize() { values = values.cwiseProduct(mask); }
};

struct Dataset {
  std::vector<TimeSeries> series;
  NormStats norm;

  bool empty() const { return series.empty(); }
  std::size_t size() const { return series.size(); }
};

struct OUParams {
  Eigen::VectorXd theta;  // mean-reversion rates, > 0
  Eigen::VectorXd mu;     // long-run means
  Eigen::VectorXd sigma;  // noise scales, > 0

  int dims() const { return static_cast<int>(theta.size()); }
  void validate() const;
};

// Euler-Maruyama simulation of dX = theta.*(mu - X) dt + sigma.*dW from a
// stationary start X0 ~ N(mu, sigma^2 / (2 theta)); frames recorded on the
// uniform lattice {0, lattice_dt, ..., horizon} with full masks.
std::vector<TimeSeries> simulate_double_ou(const OUParams& params, int n_seq, double horizon,
                                           double lattice_dt, double sim_dt, std::uint64_t seed);

// Drops each frame with probability p_time, then each remaining cell with
// probability p_dim; re-draws a row's cell pattern if it would empty the
// row. Dropped cells are zero-filled. Guarantees >= 2 retained rows.
TimeSeries sporadify(const TimeSeries& series, double p_time, double p_dim, std::uint64_t seed);

// Cells removed by sporadify, as a series over the times that lost at
// least one cell (values are the ground truth, mask marks removed cells).
TimeSeries heldout_complement(const TimeSeries& dense, const TimeSeries& observed);

// CSV schema: header "series_id,time,value_1..value_D,mask_1..mask_D".
std::vector<TimeSeries> load_sporadic_csv(const std::string& path);
void save_sporadic_csv(const std::string& path, const std::vector<TimeSeries>& series);

// Per-dimension masked mean/std over the given (training) dataset.
// Dimensions with no observations or zero spread raise ConfigError.
NormStats compute_norm_stats(const Dataset& train);
void apply_normalization(Dataset& ds, const NormStats& stats);
void apply_normalization(TimeSeries& s, const NormStats& stats);
double denormalize_value(double v, const NormStats& stats, int dim);

struct SplitSpec {
  double train{0.70}, val{0.15}, test{0.15};
};

struct Splits {
  Dataset train, val, test;
};

// Seeded permutation split by sequence.
Splits split_dataset(const std::vector<TimeSeries>& all, const SplitSpec& spec,
                     std::uint64_t seed);

}  // namespace vsdn
