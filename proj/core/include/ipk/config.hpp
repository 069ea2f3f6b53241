#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ipk/dynamics.hpp"
#include "ipk/policy.hpp"
#include "ipk/prior.hpp"
#include "ipk/sim.hpp"

namespace ipk::config {

enum class Mode { kIpk, kMbpo, kSac, kBasic };

const char* to_string(Mode m);
Mode mode_from_string(const std::string& s);

/// Full experiment description. Defaults reproduce the reference
/// hyperparameter set (Adam at 3e-4, two hidden layers of 256, batch 256,
/// sigmoid nonlinearity, gamma 0.99, target entropy -2, target divergence
/// -1.5, task length 300, epoch length 1000, rollout length 20, model
/// training every 250 steps, 7 ensemble members, replay capacity 1e6, 600
/// initial exploration steps).
struct ExperimentConfig {
  Mode mode = Mode::kIpk;
  std::uint64_t seed = 1;
  std::string out_dir = "runs/run";

  int epochs = 10;
  int epoch_length = 1000;
  int task_length = 300;
  int rollout_length = 20;
  int model_train_frequency = 250;
  int model_count = 7;
  int batch_size = 256;
  int initial_exploration_steps = 600;
  std::size_t buffer_capacity = 1000000;

  double learning_rate = 3e-4;
  double gamma = 0.99;
  double target_entropy = -2.0;
  double target_divergence = -1.5;

  int hidden_layers = 2;
  int hidden_units = 256;
  std::string activation = "sigmoid";

  // Pieces the reference set leaves open, surfaced as configuration.
  double zeta_init = 0.95;
  double zeta_lr = 5e-3;
  double model_fraction = 0.5;  // share of each update batch drawn from model data
  int sac_updates_per_step = 1;  // policy/critic gradient updates per environment step
  int model_grad_steps = 120;   // gradient steps per model-training event
  int rollout_batch = 64;       // branch starts per model-training event
  std::size_t model_buffer_capacity = 1000000;
  double init_alpha = 1.0;
  double tau = 0.005;
  double logstd_min = -5.0;
  double logstd_max = 2.0;

  prior::BasicConfig basic;
  sim::EnvConfig env;

  std::vector<int> hidden() const;
  nn::Activation activation_enum() const;
  sim::EnvConfig env_config() const;  // env block with task length stamped in
  policy::SacConfig sac_config() const;
  dynamics::DynamicsConfig dynamics_config() const;

  void validate() const;  // throws std::invalid_argument with a message

  static ExperimentConfig from_json(const std::string& text);
  std::string to_json() const;  // round-trips through from_json

  static ExperimentConfig load(const std::string& path);
  void save(const std::string& path) const;

  /// Small-scale preset for laptop-speed comparative runs: 10 epochs of 200
  /// steps, task length 100, slimmer networks.
  static ExperimentConfig desk_preset();
};

}  // namespace ipk::config
