#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "ipk/config.hpp"
#include "ipk/dynamics.hpp"
#include "ipk/policy.hpp"
#include "ipk/prior.hpp"
#include "ipk/replay.hpp"
#include "ipk/rng.hpp"
#include "ipk/sim.hpp"

namespace ipk::agent {

struct CounterfactualResult {
  double r_alt = 0.0;
  sim::Observation o_next_alt;
};

/// Local-linearity estimate of the outcome an alternative action would have
/// produced on the step that actually executed `a_exec`. The reward shifts by
/// the summed action difference; the observation delta is rescaled per image
/// axis by the ratio of net axis commands (ratios clamped to +-20), with the
/// distance and accumulator components following the mean ratio. Returns
/// nothing when the executed action has no net axis actuation to divide by.
std::optional<CounterfactualResult> counterfactual_estimate(const sim::Observation& o,
                                                            const Eigen::Vector4d& a_exec,
                                                            double r_real,
                                                            const sim::Observation& o_next,
                                                            const Eigen::Vector4d& a_alt);

struct EpochMetrics {
  int epoch = 0;
  double epoch_return = 0.0;
  double task_length = 0.0;
  double mean_kl = 0.0;
  double zeta_bas = 0.0;
};

struct TrainHooks {
  std::function<void(const EpochMetrics&)> on_epoch;
  std::function<void(long step, int member, double nll)> on_model_loss;
  std::function<void(long step, const policy::UpdateReport& rep, double zeta, double mean_kl)>
      on_update;
};

/// Orchestrates one experiment: initial exploration, accuracy estimation,
/// then epochs of environment interaction with model training, fusion
/// sampling, counterfactual storage, and policy updates, depending on mode.
class Trainer {
 public:
  explicit Trainer(config::ExperimentConfig cfg);

  void run_initial_exploration();
  EpochMetrics run_epoch(int epoch);
  std::vector<EpochMetrics> train(const TrainHooks& hooks = {});

  const config::ExperimentConfig& experiment_config() const { return cfg_; }
  sim::TendonEnv& env() { return env_; }
  replay::ReplayBuffer& buffer() { return buffer_; }
  replay::ModelBuffer& model_buffer() { return model_buffer_; }
  policy::SacAgent* sac() { return sac_.get(); }
  dynamics::EnsembleModel* ensemble() { return ensemble_.get(); }
  policy::FusionState& fusion() { return fusion_; }
  const prior::AccuracyEstimate& accuracy() const { return accuracy_; }
  void set_accuracy(const prior::AccuracyEstimate& est) { accuracy_ = est; }
  bool exploration_done() const { return exploration_done_; }
  long steps_trained() const { return train_steps_; }

  /// Divergence between the rule prior and the current policy at one
  /// observation, in the merged pre-squash axis space.
  double prior_policy_divergence(const sim::Observation& o) const;

  struct RngStates {
    std::string action, update, batch, model, rollout, episode;
  };
  RngStates rng_states() const;
  void restore_rng_states(const RngStates& s);
  void set_steps_trained(long n) { train_steps_ = n; }
  void set_exploration_done(bool v) { exploration_done_ = v; }

 private:
  void ensure_env_ready();
  Eigen::Vector4d uniform_action(Rng& rng) const;
  EpochMetrics run_epoch_impl(int epoch, const TrainHooks& hooks);
  void handle_model_training(const TrainHooks& hooks);
  struct UpdateOutcome {
    bool updated = false;
    double mean_kl = 0.0;
  };
  UpdateOutcome run_sac_update(const TrainHooks& hooks);

  config::ExperimentConfig cfg_;
  sim::TendonEnv env_;
  replay::ReplayBuffer buffer_;
  replay::ModelBuffer model_buffer_;
  std::unique_ptr<policy::SacAgent> sac_;
  std::unique_ptr<dynamics::EnsembleModel> ensemble_;
  policy::FusionState fusion_;
  prior::AccuracyEstimate accuracy_;

  Rng act_rng_, update_rng_, batch_rng_, model_rng_, rollout_rng_, episode_rng_;

  bool exploration_done_ = false;
  bool env_ready_ = false;
  long train_steps_ = 0;     // environment steps after exploration
  int episode_len_ = 0;
  std::vector<int> finished_episode_lengths_;  // cleared per epoch

  bool learns() const { return cfg_.mode != config::Mode::kBasic; }
  bool uses_models() const {
    return cfg_.mode == config::Mode::kIpk || cfg_.mode == config::Mode::kMbpo;
  }
  bool uses_prior() const { return cfg_.mode == config::Mode::kIpk; }
};

}  // namespace ipk::agent
