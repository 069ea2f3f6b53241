#include "ipk/agent.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ipk::agent {

namespace {
std::string engine_to_string(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng engine_from_string(const std::string& s) {
  Rng rng;
  std::istringstream is(s);
  is >> rng;
  if (!is) throw std::runtime_error("invalid serialized rng state");
  return rng;
}
}  // namespace

std::optional<CounterfactualResult> counterfactual_estimate(const sim::Observation& o,
                                                            const Eigen::Vector4d& a_exec,
                                                            double r_real,
                                                            const sim::Observation& o_next,
                                                            const Eigen::Vector4d& a_alt) {
  constexpr double kMinNet = 1e-3;
  constexpr double kRatioClamp = 20.0;
  const double exec_net[2] = {prior::PriorMap::net_w(a_exec), prior::PriorMap::net_l(a_exec)};
  const double alt_net[2] = {prior::PriorMap::net_w(a_alt), prior::PriorMap::net_l(a_alt)};

  double ratio[2];
  bool have[2];
  double mean_ratio = 0.0;
  int n_have = 0;
  for (int ax = 0; ax < 2; ++ax) {
    have[ax] = std::abs(exec_net[ax]) > kMinNet;
    if (have[ax]) {
      ratio[ax] = std::clamp(alt_net[ax] / exec_net[ax], -kRatioClamp, kRatioClamp);
      mean_ratio += ratio[ax];
      ++n_have;
    }
  }
  if (n_have == 0) return std::nullopt;
  mean_ratio /= static_cast<double>(n_have);
  for (int ax = 0; ax < 2; ++ax)
    if (!have[ax]) ratio[ax] = mean_ratio;

  const Eigen::VectorXd delta = o_next.to_vector() - o.to_vector();
  Eigen::VectorXd scaled(sim::Observation::kDim);
  scaled(0) = delta(0) * ratio[0];
  scaled(1) = delta(1) * ratio[1];
  for (int i = 2; i < sim::Observation::kDim; ++i) scaled(i) = delta(i) * mean_ratio;

  CounterfactualResult res;
  res.r_alt = (a_alt - a_exec).sum() + r_real;
  res.o_next_alt = sim::Observation::from_vector(o.to_vector() + scaled);
  res.o_next_alt.visible =
      std::abs(res.o_next_alt.w) <= 1.0 && std::abs(res.o_next_alt.l) <= 1.0;
  return res;
}

Trainer::Trainer(config::ExperimentConfig cfg)
    : cfg_(std::move(cfg)),
      env_(cfg_.env_config()),
      buffer_(cfg_.buffer_capacity),
      model_buffer_(cfg_.model_buffer_capacity),
      fusion_(uses_prior() ? cfg_.zeta_init : 0.0, cfg_.zeta_lr, cfg_.target_divergence),
      act_rng_(make_stream(cfg_.seed, "action")),
      update_rng_(make_stream(cfg_.seed, "update")),
      batch_rng_(make_stream(cfg_.seed, "batch")),
      model_rng_(make_stream(cfg_.seed, "model")),
      rollout_rng_(make_stream(cfg_.seed, "rollout")),
      episode_rng_(make_stream(cfg_.seed, "episode")) {
  cfg_.validate();
  Rng init_rng = make_stream(cfg_.seed, "net-init");
  if (learns()) sac_ = std::make_unique<policy::SacAgent>(cfg_.sac_config(), init_rng);
  if (uses_models())
    ensemble_ = std::make_unique<dynamics::EnsembleModel>(cfg_.dynamics_config(), init_rng);
}

void Trainer::ensure_env_ready() {
  if (!env_ready_) {
    env_.reset(episode_rng_());
    env_ready_ = true;
    episode_len_ = 0;
  }
}

Eigen::Vector4d Trainer::uniform_action(Rng& rng) const {
  Eigen::Vector4d a;
  for (int i = 0; i < 4; ++i) a(i) = uniform(rng, -1.0, 1.0);
  return a;
}

Trainer::RngStates Trainer::rng_states() const {
  return RngStates{engine_to_string(act_rng_),     engine_to_string(update_rng_),
                   engine_to_string(batch_rng_),   engine_to_string(model_rng_),
                   engine_to_string(rollout_rng_), engine_to_string(episode_rng_)};
}

void Trainer::restore_rng_states(const RngStates& s) {
  act_rng_ = engine_from_string(s.action);
  update_rng_ = engine_from_string(s.update);
  batch_rng_ = engine_from_string(s.batch);
  model_rng_ = engine_from_string(s.model);
  rollout_rng_ = engine_from_string(s.rollout);
  episode_rng_ = engine_from_string(s.episode);
}

double Trainer::prior_policy_divergence(const sim::Observation& o) const {
  const gauss::DiagGaussian bas_axis = gauss::merge_motor_pairs(policy::to_presquash(
      prior::basic_distribution(prior::canonical_basic_action(o, cfg_.basic), accuracy_,
                                cfg_.basic.exploration_var)));
  const gauss::DiagGaussian gau_axis =
      gauss::merge_motor_pairs(sac_->policy_distribution(o.to_vector()));
  return gauss::kl_divergence(bas_axis, gau_axis);
}

void Trainer::run_initial_exploration() {
  if (exploration_done_) throw std::logic_error("run_initial_exploration called twice");
  exploration_done_ = true;
  if (!learns()) return;  // the rule-only mode has nothing to fill a buffer for

  ensure_env_ready();
  std::vector<prior::ExecutedStep> executed;
  executed.reserve(static_cast<std::size_t>(cfg_.initial_exploration_steps));

  for (int i = 0; i < cfg_.initial_exploration_steps; ++i) {
    const sim::Observation o = env_.observation();
    Eigen::Vector4d a_exec;
    if (uses_prior()) {
      const auto ab = prior::basic_action(o, cfg_.basic, act_rng_);
      if (!ab) {  // should not happen: episodes end when the target leaves view
        env_.reset(episode_rng_());
        episode_len_ = 0;
        continue;
      }
      a_exec = *ab;
    } else {
      a_exec = uniform_action(act_rng_);
    }

    const sim::StepResult res = env_.step(a_exec);
    ++episode_len_;

    replay::AugmentedTransition t;
    t.o_real = o;
    t.a_real = a_exec;
    t.r_real = res.reward;
    t.o_next_real = res.observation;
    t.done = res.done;
    t.h_setpoint = env_.h_setpoint();
    t.phase = replay::Phase::kInitialExploration;
    if (uses_prior()) {
      // Pair the executed rule step with a uniform counterfactual probe.
      const Eigen::Vector4d a_uni = uniform_action(act_rng_);
      const auto cf = counterfactual_estimate(o, a_exec, res.reward, res.observation, a_uni);
      if (cf) {
        t.a_mbpo = a_uni;
        t.r_mbpo = cf->r_alt;
        t.o_next_mbpo = cf->o_next_alt;
      } else {
        t.a_mbpo = a_exec;
        t.r_mbpo = res.reward;
        t.o_next_mbpo = res.observation;
      }
      executed.push_back(prior::ExecutedStep{o, a_exec, res.observation});
    } else {
      t.a_mbpo = a_exec;
      t.r_mbpo = res.reward;
      t.o_next_mbpo = res.observation;
    }
    buffer_.push(std::move(t));

    if (res.done) {
      env_.reset(episode_rng_());
      episode_len_ = 0;
    }
  }

  if (uses_prior()) accuracy_ = prior::estimate_accuracy(executed);
}

void Trainer::handle_model_training(const TrainHooks& hooks) {
  ensemble_->refit_normalizers(buffer_);
  for (int g = 0; g < cfg_.model_grad_steps; ++g) {
    const dynamics::ModelStepLoss loss =
        ensemble_->train_step(buffer_, cfg_.batch_size, model_rng_);
    if (hooks.on_model_loss)
      for (std::size_t m = 0; m < loss.member_nll.size(); ++m)
        hooks.on_model_loss(train_steps_, static_cast<int>(m), loss.member_nll[m]);
  }
  const dynamics::PolicySampler sampler = [this](const Eigen::VectorXd& obs, Rng& rng) {
    return sac_->sample_action(obs, rng);
  };
  dynamics::branch_rollout(*ensemble_, sampler, buffer_, cfg_.rollout_batch, cfg_.rollout_length,
                           cfg_.env_config(), model_buffer_, rollout_rng_);
}

Trainer::UpdateOutcome Trainer::run_sac_update(const TrainHooks& hooks) {
  UpdateOutcome out;
  if (buffer_.size() < static_cast<std::size_t>(cfg_.batch_size)) return out;

  const int n_model =
      (uses_models() && !model_buffer_.empty())
          ? static_cast<int>(std::lround(cfg_.model_fraction * cfg_.batch_size))
          : 0;
  const int n_env = cfg_.batch_size - n_model;

  const double zeta_sampling = uses_prior() ? fusion_.zeta_bas() : 0.0;
  std::vector<replay::SampledHalf> halves = buffer_.weighted_sample(zeta_sampling, n_env,
                                                                    batch_rng_);
  std::vector<replay::Transition> batch;
  batch.reserve(static_cast<std::size_t>(cfg_.batch_size));
  std::vector<double> kls;
  if (uses_prior()) kls.reserve(halves.size());
  for (replay::SampledHalf& h : halves) {
    if (uses_prior()) {
      // Divergence-augmented reward, evaluated against the current policy and
      // coefficient at sampling time.
      const double kl = prior_policy_divergence(h.o_real);
      h.t.reward = policy::augmented_reward_from_kl(h.t.reward, kl, fusion_);
      kls.push_back(kl);
    }
    batch.push_back(std::move(h.t));
  }
  for (int i = 0; i < n_model; ++i) batch.push_back(model_buffer_.sample(batch_rng_));

  const policy::UpdateReport rep = sac_->update(batch, update_rng_);
  if (!rep.ok)
    throw std::runtime_error("policy update failed at step " + std::to_string(train_steps_) +
                             ": " + rep.error);

  out.updated = true;
  if (uses_prior() && !kls.empty()) {
    double m = 0.0;
    for (double k : kls) m += k;
    out.mean_kl = m / static_cast<double>(kls.size());
    fusion_.update(kls);
  }
  if (hooks.on_update) hooks.on_update(train_steps_, rep, fusion_.zeta_bas(), out.mean_kl);
  return out;
}

EpochMetrics Trainer::run_epoch(int epoch) {
  if (!exploration_done_) throw std::logic_error("run_epoch before initial exploration");
  return run_epoch_impl(epoch, TrainHooks{});
}

std::vector<EpochMetrics> Trainer::train(const TrainHooks& hooks) {
  run_initial_exploration();
  std::vector<EpochMetrics> all;
  all.reserve(static_cast<std::size_t>(cfg_.epochs));
  for (int e = 1; e <= cfg_.epochs; ++e) {
    all.push_back(run_epoch_impl(e, hooks));
    if (hooks.on_epoch) hooks.on_epoch(all.back());
  }
  return all;
}

EpochMetrics Trainer::run_epoch_impl(int epoch, const TrainHooks& hooks) {
  ensure_env_ready();
  finished_episode_lengths_.clear();
  double epoch_return = 0.0;
  double kl_sum = 0.0;
  long kl_count = 0;

  for (int s = 0; s < cfg_.epoch_length; ++s) {
    if (uses_models() && train_steps_ % cfg_.model_train_frequency == 0)
      handle_model_training(hooks);

    const sim::Observation o = env_.observation();
    Eigen::Vector4d a_exec = Eigen::Vector4d::Zero();
    Eigen::Vector4d a_gau = Eigen::Vector4d::Zero();
    bool have_gau = false;

    switch (cfg_.mode) {
      case config::Mode::kBasic: {
        const auto ab = prior::basic_action(o, cfg_.basic, act_rng_);
        if (ab) a_exec = *ab;
        break;
      }
      case config::Mode::kSac:
      case config::Mode::kMbpo:
        a_exec = sac_->sample_action(o.to_vector(), act_rng_);
        break;
      case config::Mode::kIpk: {
        const auto ab = prior::basic_action(o, cfg_.basic, act_rng_);
        const gauss::DiagGaussian g_bas = prior::basic_distribution(
            ab.value_or(Eigen::Vector4d::Zero()), accuracy_, cfg_.basic.exploration_var);
        const policy::FusionSample fs =
            policy::fuse_and_sample(*sac_, fusion_, g_bas, o.to_vector(), act_rng_);
        a_exec = fs.a_fus;
        a_gau = fs.a_gau;
        have_gau = true;
        break;
      }
    }

    const sim::StepResult res = env_.step(a_exec);
    ++episode_len_;
    epoch_return += res.reward;

    if (learns()) {
      replay::AugmentedTransition t;
      t.o_real = o;
      t.a_real = a_exec;
      t.r_real = res.reward;
      t.o_next_real = res.observation;
      t.done = res.done;
      t.h_setpoint = env_.h_setpoint();
      t.phase = replay::Phase::kFusion;
      if (have_gau) {
        const auto cf = counterfactual_estimate(o, a_exec, res.reward, res.observation, a_gau);
        if (cf) {
          t.a_mbpo = a_gau;
          t.r_mbpo = cf->r_alt;
          t.o_next_mbpo = cf->o_next_alt;
        } else {
          t.a_mbpo = a_exec;
          t.r_mbpo = res.reward;
          t.o_next_mbpo = res.observation;
        }
      } else {
        t.a_mbpo = a_exec;
        t.r_mbpo = res.reward;
        t.o_next_mbpo = res.observation;
      }
      buffer_.push(std::move(t));
    }

    if (res.done) {
      finished_episode_lengths_.push_back(episode_len_);
      env_.reset(episode_rng_());
      episode_len_ = 0;
    }

    if (learns()) {
      for (int g = 0; g < cfg_.sac_updates_per_step; ++g) {
        const UpdateOutcome u = run_sac_update(hooks);
        if (u.updated && uses_prior()) {
          kl_sum += u.mean_kl;
          ++kl_count;
        }
      }
    }
    ++train_steps_;
  }

  EpochMetrics m;
  m.epoch = epoch;
  m.epoch_return = epoch_return;
  if (!finished_episode_lengths_.empty()) {
    double s = 0.0;
    for (int len : finished_episode_lengths_) s += len;
    m.task_length = s / static_cast<double>(finished_episode_lengths_.size());
  } else {
    m.task_length = episode_len_;
  }
  m.mean_kl = kl_count > 0 ? kl_sum / static_cast<double>(kl_count) : 0.0;
  m.zeta_bas = uses_prior() ? fusion_.zeta_bas()
                            : (cfg_.mode == config::Mode::kBasic ? 1.0 : 0.0);
  return m;
}

}  // namespace ipk::agent
