#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "ipk/gauss.hpp"
#include "ipk/nn.hpp"
#include "ipk/replay.hpp"
#include "ipk/rng.hpp"

namespace ipk::policy {

struct SacConfig {
  std::vector<int> hidden = {256, 256};
  nn::Activation activation = nn::Activation::kSigmoid;
  double learning_rate = 3e-4;
  double gamma = 0.99;
  double tau = 0.005;  // Polyak rate for the target critics
  double target_entropy = -2.0;
  double logstd_min = -5.0;
  double logstd_max = 2.0;
  double init_alpha = 1.0;
};

/// Exploitation coefficient of the rule prior and its adaptation state.
class FusionState {
 public:
  FusionState(double zeta_init, double learning_rate, double target_divergence = -1.5);

  double zeta_bas() const { return zeta_bas_; }
  double zeta_real() const { return 1.0 - zeta_bas_; }
  double target_divergence() const { return target_divergence_; }
  double learning_rate() const { return lr_; }

  /// Clamped ascent step: zeta moves up while the mean divergence exceeds
  /// -target_divergence and decays below it. Returns the new zeta.
  double update(const std::vector<double>& kl_batch);
  void set_zeta(double z);

 private:
  double zeta_bas_;
  double lr_;
  double target_divergence_;
};

struct FusionSample {
  Eigen::Vector4d a_fus = Eigen::Vector4d::Zero();  // executed (fused) action
  Eigen::Vector4d a_gau = Eigen::Vector4d::Zero();  // pure-policy counterfactual action
  gauss::DiagGaussian g_gau = gauss::DiagGaussian::standard(4);  // pre-squash policy Gaussian
  gauss::DiagGaussian g_fus = gauss::DiagGaussian::standard(4);  // pre-squash fused Gaussian
};

struct UpdateReport {
  bool ok = false;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double alpha = 0.0;
  double mean_log_pi = 0.0;
  std::string error;
};

/// Soft actor-critic over the 7-dim observation and 4 squashed motor commands,
/// with twin critics, Polyak-averaged targets, and auto-tuned temperature.
class SacAgent {
 public:
  static constexpr int kObsDim = 7;
  static constexpr int kActDim = 4;

  SacAgent(SacConfig cfg, Rng& init_rng);

  /// Pre-squash action Gaussian at one observation.
  gauss::DiagGaussian policy_distribution(const Eigen::VectorXd& obs) const;

  /// Squashed action: tanh of the pre-squash mean (deterministic) or of a
  /// reparameterized sample.
  Eigen::Vector4d sample_action(const Eigen::VectorXd& obs, Rng& rng) const;
  Eigen::Vector4d mean_action(const Eigen::VectorXd& obs) const;

  /// One gradient step on critics, actor, and temperature from a batch of
  /// plain transitions, then a Polyak step on the target critics. Non-finite
  /// losses abort the remaining updates and surface in the report.
  UpdateReport update(const std::vector<replay::Transition>& batch, Rng& rng);

  double alpha() const;
  double log_alpha() const { return log_alpha_; }
  const SacConfig& config() const { return cfg_; }

  // Checkpoint access.
  nn::Mlp& actor() { return actor_; }
  nn::Mlp& critic1() { return critic1_; }
  nn::Mlp& critic2() { return critic2_; }
  nn::Mlp& target1() { return target1_; }
  nn::Mlp& target2() { return target2_; }
  nn::AdamState& actor_opt() { return actor_opt_; }
  nn::AdamState& critic1_opt() { return critic1_opt_; }
  nn::AdamState& critic2_opt() { return critic2_opt_; }
  nn::ScalarAdam& alpha_opt() { return alpha_opt_; }
  void set_log_alpha(double v) { log_alpha_ = v; }
  const nn::Mlp& actor() const { return actor_; }

 private:
  struct SquashedSample {
    nn::Matrix u, a, log_pi_elems;  // pre-squash, squashed, per-element log-density terms
  };
  SquashedSample sample_batch(const nn::Matrix& obs, Rng& rng) const;

  SacConfig cfg_;
  nn::Mlp actor_, critic1_, critic2_, target1_, target2_;
  nn::AdamState actor_opt_, critic1_opt_, critic2_opt_;
  double log_alpha_ = 0.0;
  nn::ScalarAdam alpha_opt_;
};

/// Inverse-squash placement of a bounded-space Gaussian: atanh of the clamped
/// mean, variance carried over unchanged.
gauss::DiagGaussian to_presquash(const gauss::DiagGaussian& bounded);

/// Draws the fused and the pure-policy action with one shared noise vector.
/// `g_bas` is the rule prior's motor-space Gaussian; fusion happens in
/// pre-squash space at weight zeta_bas, then both samples are squashed.
FusionSample fuse_and_sample(const SacAgent& agent, const FusionState& fusion,
                             const gauss::DiagGaussian& g_bas, const Eigen::VectorXd& obs,
                             Rng& rng);

/// Divergence-augmented policy reward. Both Gaussians must already live in
/// the merged 2-axis space.
double augmented_reward(double r_real, const gauss::DiagGaussian& g_bas_axis,
                        const gauss::DiagGaussian& g_gau_axis, const FusionState& fusion);
double augmented_reward_from_kl(double r_real, double kl, const FusionState& fusion);

}  // namespace ipk::policy
