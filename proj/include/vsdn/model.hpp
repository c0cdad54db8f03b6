// The VSDN model: prior/posterior drift with a shared drift network,
// feature-only diffusion (never a function of the latent state), Gaussian
// decoder, posterior path sampling with KL and log-importance-weight
// accumulation, recurrent prediction and interpolation.
//
// Two inference variants share the machinery: filtering corrects the
// drift only on the interval leaving an observation node (elsewhere the
// posterior drift IS the prior drift, so those KL increments are exactly
// zero and are skipped); smoothing adds a backward feature everywhere.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vsdn/encoders.hpp"

namespace vsdn {

enum class InferenceMode { kFiltering, kSmoothing };

struct VSDNConfig {
  int d1{15};          // latent dimension
  int d2{2};           // data dimension
  int d_h{15};         // hidden feature width
  int mlp_hidden{25};  // hidden layer width of all feed-forward blocks
  Activation activation{Activation::kRelu};
  double max_dt{0.01};
  int K{5};            // sampled latent trajectories for the bounds
  double alpha{0.5};   // IWAE mix weight, in (0,1)
  double beta{1.0};    // KL weight
  InferenceMode inference_mode{InferenceMode::kFiltering};
  int prediction_samples{25};
  double log_std_min{-7.0};
  double log_std_max{7.0};
  bool use_init_net{false};  // initial latent from the first observation
  int init_net_hidden{128};
  // Ablation: collapse the latent path to its drift (no noise, no KL /
  // log-weight terms). Used by the no-latent baseline.
  bool deterministic_latent{false};

  void validate() const;
};

struct GaussianObsParams {
  Eigen::VectorXd mean;
  Eigen::VectorXd log_std;
};

// Tape handles for K sampled latent trajectories over one grid.
struct LatentPath {
  std::vector<NodeId> states;  // per grid node, each K x d1
  std::vector<Mat> noise;      // raw eps per interval, each K x d1
  NodeId kl_accum{-1};         // K x 1, >= 0
  NodeId logw_accum{-1};       // K x 1
};

struct SeqObjective {
  NodeId vae{-1}, iwae{-1}, mixed{-1};
  NodeId recon_rows{-1};  // K x 1: per-sample total reconstruction log-lik
  NodeId kl_rows{-1};     // K x 1
  NodeId logw_rows{-1};   // K x 1
  Mat recon_logliks;      // K x n values (per sample, per frame)
  double frame_nll{0.0};  // posterior-predictive per-frame NLL (model scale)
  double frame_mse{0.0};
  int n_frames{0};
};

struct FrameEstimate {
  double time{0.0};
  int frame_index{0};
  double nll{0.0};               // model scale; aggregation may de-normalize
  Eigen::VectorXd point;         // sample-averaged decoder mean
  Eigen::VectorXd mix_std;       // moment-matched predictive std
  Eigen::VectorXd truth;
  Eigen::VectorXd mask;
};

struct PredictionResult {
  std::vector<FrameEstimate> frames;  // one per observation index >= 1
};

struct InterpolationResult {
  std::vector<FrameEstimate> queries;  // truth/mask zero where unknown
};

class VSDN {
 public:
  explicit VSDN(VSDNConfig cfg);

  const VSDNConfig& config() const { return cfg_; }
  void init_params(ParamStore& store, std::uint64_t seed) const;

  // ---- network heads (row-batched) ----------------------------------
  NodeId drift_prior(const BoundParams& p, NodeId x, NodeId pre_row) const;

  struct Diffusion {
    NodeId r{-1};      // 1 x d1, strictly positive
    NodeId log_r{-1};  // pre-exp output of the diffusion net
    NodeId inv_r{-1};  // exp(-log_r)
  };
  Diffusion diffusion(const BoundParams& p, NodeId pre_row) const;

  // aux_row: back feature (smoothing) or post feature (filtering, only
  // valid at observation nodes). Filtering away from observations is the
  // prior drift; passing an aux there is a contract violation.
  NodeId drift_posterior(const BoundParams& p, NodeId x, NodeId pre_row,
                         std::optional<NodeId> aux_row, InferenceMode mode,
                         bool at_observation) const;

  struct DecodeNodes {
    NodeId mean{-1};     // rows x d2
    NodeId log_std{-1};  // rows x d2, clamped
  };
  DecodeNodes decode(const BoundParams& p, NodeId x, NodeId pre_row) const;

  // Negative masked Gaussian log-density; unobserved dims contribute 0.
  static double gaussian_nll(const Eigen::VectorXd& y, const Eigen::VectorXd& mask,
                             const GaussianObsParams& obs);

  // Per-sample masked log-likelihood column (rows x 1) for one frame.
  NodeId masked_loglik_rows(const BoundParams& p, const DecodeNodes& dec,
                            const Eigen::RowVectorXd& y, const Eigen::RowVectorXd& mask) const;

  // ---- path sampling and objectives ----------------------------------
  LatentPath sample_posterior_paths(const BoundParams& p, const TimeSeries& series,
                                    const TimeGrid& grid, const EncoderOutput& enc, int K,
                                    std::uint64_t seed,
                                    const std::vector<Mat>* frozen_noise = nullptr) const;

  SeqObjective sequence_objective(Tape& tape, const BoundParams& p, const TimeSeries& series,
                                  int K, std::uint64_t seed,
                                  const std::vector<Mat>* frozen_noise = nullptr) const;

  // ---- applications ----------------------------------------------------
  // Recurrent one-step-ahead evaluation under the prior SDE conditioned on
  // strictly-past observations through the forward encoder.
  PredictionResult predict_sequence(const ParamStore& store, const TimeSeries& series, int S,
                                    std::uint64_t seed) const;

  // Posterior-path reconstruction at query times (mode per config).
  // heldout, when given, supplies truth values/masks for NLL/MSE.
  InterpolationResult interpolate(const ParamStore& store, const TimeSeries& observed,
                                  const std::vector<double>& query_times, int S,
                                  std::uint64_t seed, const TimeSeries* heldout = nullptr,
                                  double horizon = -1.0) const;

  TimeGrid grid_for(const TimeSeries& series) const;
  const SequenceEncoder& forward_encoder() const { return fwd_; }
  const SequenceEncoder& backward_encoder() const { return bwd_; }

 private:
  NodeId initial_state_rows(const BoundParams& p, const TimeSeries& series, int rows) const;

  VSDNConfig cfg_;
  SequenceEncoder fwd_, bwd_;
  MLP drift_net_, diff_net_, decoder_, init_net_;
};

}  // namespace vsdn
