#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "ipk/nn.hpp"
#include "ipk/replay.hpp"
#include "ipk/rng.hpp"
#include "ipk/sim.hpp"

namespace ipk::dynamics {

/// Per-dimension affine whitening fitted from data; denormalize(normalize(x))
/// is the identity up to rounding.
class Normalizer {
 public:
  Normalizer() = default;
  explicit Normalizer(int dim);

  void fit(const std::vector<Eigen::VectorXd>& data);
  Eigen::VectorXd normalize(const Eigen::VectorXd& x) const;
  Eigen::VectorXd denormalize(const Eigen::VectorXd& x) const;
  /// Maps a per-dimension variance from normalized to raw space.
  Eigen::VectorXd denormalize_var(const Eigen::VectorXd& v) const;

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& std() const { return std_; }
  void restore(Eigen::VectorXd mean, Eigen::VectorXd std);
  bool fitted() const { return fitted_; }

 private:
  Eigen::VectorXd mean_, std_;
  bool fitted_ = false;
};

struct DynamicsConfig {
  int members = 7;
  std::vector<int> hidden = {256, 256};
  nn::Activation activation = nn::Activation::kSigmoid;
  double learning_rate = 3e-4;
  double logvar_min = -10.0;
  double logvar_max = 2.0;
};

struct DeltaPrediction {
  Eigen::VectorXd mean;  // observation-difference mean, raw space
  Eigen::VectorXd var;   // per-dimension variance, raw space
};

struct ModelStepLoss {
  std::vector<double> member_nll;  // one entry per member
};

/// Bootstrap ensemble of Gaussian-head networks predicting the next-step
/// observation difference from (observation, action). Trained on the executed
/// halves of the replay buffer only, since the counterfactual halves are
/// themselves estimates.
class EnsembleModel {
 public:
  EnsembleModel(DynamicsConfig cfg, Rng& init_rng);

  int member_count() const { return static_cast<int>(nets_.size()); }
  bool trained() const { return train_steps_ > 0; }
  std::int64_t train_steps() const { return train_steps_; }
  const DynamicsConfig& config() const { return cfg_; }

  /// Refits every member's whitening statistics from the buffer's executed
  /// halves. Call once per training event, before the gradient steps.
  void refit_normalizers(const replay::ReplayBuffer& env);

  /// One gradient step per member on an independent bootstrap batch drawn
  /// from the buffer's executed halves. Returns one negative-log-likelihood
  /// per member, or an empty loss when the buffer is smaller than the batch.
  ModelStepLoss train_step(const replay::ReplayBuffer& env, int batch_size, Rng& rng);

  /// Mean/variance of one member's Gaussian head, raw space.
  DeltaPrediction predict(int member, const Eigen::VectorXd& obs,
                          const Eigen::Vector4d& action) const;

  struct Sampled {
    Eigen::VectorXd delta;
    int member = -1;
  };
  /// Uniformly picks a member and samples an observation difference from it.
  Sampled sample_delta(const Eigen::VectorXd& obs, const Eigen::Vector4d& action,
                       Rng& rng) const;

  /// Standard deviation across member means; grows off-distribution.
  double disagreement(const Eigen::VectorXd& obs, const Eigen::Vector4d& action) const;

  // Checkpoint access.
  std::vector<nn::Mlp>& nets() { return nets_; }
  std::vector<nn::AdamState>& optimizers() { return opts_; }
  std::vector<Normalizer>& input_normalizers() { return in_norm_; }
  std::vector<Normalizer>& target_normalizers() { return out_norm_; }
  void set_train_steps(std::int64_t n) { train_steps_ = n; }

 private:
  DynamicsConfig cfg_;
  std::vector<nn::Mlp> nets_;
  std::vector<nn::AdamState> opts_;
  std::vector<Normalizer> in_norm_, out_norm_;
  std::int64_t train_steps_ = 0;
};

using PolicySampler = std::function<Eigen::Vector4d(const Eigen::VectorXd& obs, Rng& rng)>;

struct RolloutStats {
  int transitions = 0;
  int truncated_branches = 0;
};

/// Branched model rollouts: from `n_starts` states drawn uniformly out of the
/// buffer's executed halves, roll the policy `k` steps through the ensemble
/// and append the imagined transitions to the model buffer. Rewards come from
/// the known observation-change reward plus view/centering shaping; imagined
/// episodes never terminate. Branches truncate on non-finite predictions.
RolloutStats branch_rollout(const EnsembleModel& model, const PolicySampler& policy,
                            const replay::ReplayBuffer& env, int n_starts, int k,
                            const sim::EnvConfig& env_cfg, replay::ModelBuffer& out, Rng& rng);

}  // namespace ipk::dynamics
