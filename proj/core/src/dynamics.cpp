#include "ipk/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace ipk::dynamics {

Normalizer::Normalizer(int dim)
    : mean_(Eigen::VectorXd::Zero(dim)), std_(Eigen::VectorXd::Ones(dim)) {}

void Normalizer::fit(const std::vector<Eigen::VectorXd>& data) {
  if (data.empty()) throw std::invalid_argument("Normalizer::fit: empty dataset");
  const int dim = static_cast<int>(data.front().size());
  mean_ = Eigen::VectorXd::Zero(dim);
  for (const auto& x : data) mean_ += x;
  mean_ /= static_cast<double>(data.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
  for (const auto& x : data) var += (x - mean_).cwiseProduct(x - mean_);
  var /= static_cast<double>(data.size());
  std_ = var.cwiseSqrt().cwiseMax(1e-8);
  fitted_ = true;
}

Eigen::VectorXd Normalizer::normalize(const Eigen::VectorXd& x) const {
  return (x - mean_).cwiseQuotient(std_);
}

Eigen::VectorXd Normalizer::denormalize(const Eigen::VectorXd& x) const {
  return x.cwiseProduct(std_) + mean_;
}

Eigen::VectorXd Normalizer::denormalize_var(const Eigen::VectorXd& v) const {
  return v.cwiseProduct(std_.cwiseProduct(std_));
}

void Normalizer::restore(Eigen::VectorXd mean, Eigen::VectorXd std) {
  mean_ = std::move(mean);
  std_ = std::move(std);
  fitted_ = true;
}

namespace {

constexpr int kObsDim = sim::Observation::kDim;
constexpr int kActDim = 4;
constexpr int kInDim = kObsDim + kActDim;

Eigen::VectorXd model_input(const Eigen::VectorXd& obs, const Eigen::Vector4d& action) {
  Eigen::VectorXd x(kInDim);
  x << obs, action;
  return x;
}

void gather_real_pairs(const replay::ReplayBuffer& env, std::vector<Eigen::VectorXd>& inputs,
                       std::vector<Eigen::VectorXd>& targets) {
  inputs.reserve(env.size());
  targets.reserve(env.size());
  for (std::size_t i = 0; i < env.size(); ++i) {
    const replay::AugmentedTransition& t = env.at(i);
    const Eigen::VectorXd o = t.o_real.to_vector();
    inputs.push_back(model_input(o, t.a_real));
    targets.push_back(t.o_next_real.to_vector() - o);
  }
}

}  // namespace

EnsembleModel::EnsembleModel(DynamicsConfig cfg, Rng& init_rng) : cfg_(std::move(cfg)) {
  if (cfg_.members < 1) throw std::invalid_argument("EnsembleModel: need at least one member");
  nets_.reserve(static_cast<std::size_t>(cfg_.members));
  for (int m = 0; m < cfg_.members; ++m) {
    nets_.emplace_back(kInDim, cfg_.hidden, 2 * kObsDim, cfg_.activation, init_rng);
    opts_.emplace_back(nets_.back(), cfg_.learning_rate);
    in_norm_.emplace_back(kInDim);
    out_norm_.emplace_back(kObsDim);
  }
}

void EnsembleModel::refit_normalizers(const replay::ReplayBuffer& env) {
  std::vector<Eigen::VectorXd> inputs, targets;
  gather_real_pairs(env, inputs, targets);
  for (int m = 0; m < cfg_.members; ++m) {
    in_norm_[static_cast<std::size_t>(m)].fit(inputs);
    out_norm_[static_cast<std::size_t>(m)].fit(targets);
  }
}

ModelStepLoss EnsembleModel::train_step(const replay::ReplayBuffer& env, int batch_size,
                                        Rng& rng) {
  ModelStepLoss loss;
  if (env.size() < static_cast<std::size_t>(batch_size)) return loss;  // skip signal
  if (!in_norm_.front().fitted()) refit_normalizers(env);

  for (int m = 0; m < cfg_.members; ++m) {
    const auto& in_n = in_norm_[static_cast<std::size_t>(m)];
    const auto& out_n = out_norm_[static_cast<std::size_t>(m)];
    nn::Matrix X(kInDim, batch_size), Y(kObsDim, batch_size);
    for (int j = 0; j < batch_size; ++j) {
      // Bootstrap: independent uniform draws per member.
      const replay::AugmentedTransition& t = env.sample(rng);
      const Eigen::VectorXd o = t.o_real.to_vector();
      X.col(j) = in_n.normalize(model_input(o, t.a_real));
      Y.col(j) = out_n.normalize(t.o_next_real.to_vector() - o);
    }

    nn::MlpGrads grads = nn::MlpGrads::zeros_like(nets_[static_cast<std::size_t>(m)]);
    nn::Tape tape;
    const auto x = tape.constant(X);
    const auto out = tape.mlp(nets_[static_cast<std::size_t>(m)], x, &grads);
    const auto mu = tape.rows(out, 0, kObsDim);
    const auto lv = tape.soft_bound(tape.rows(out, kObsDim, kObsDim), cfg_.logvar_min,
                                    cfg_.logvar_max);
    const auto err2 = tape.square(tape.sub(tape.constant(Y), mu));
    const auto weighted = tape.mul(err2, tape.exp(tape.scale(lv, -1.0)));
    const auto nll = tape.scale(tape.sum(tape.add(weighted, lv)),
                                0.5 / static_cast<double>(batch_size));
    tape.backward(nll);
    opts_[static_cast<std::size_t>(m)].step(nets_[static_cast<std::size_t>(m)], grads);
    loss.member_nll.push_back(tape.value(nll)(0, 0));
  }
  ++train_steps_;
  return loss;
}

DeltaPrediction EnsembleModel::predict(int member, const Eigen::VectorXd& obs,
                                       const Eigen::Vector4d& action) const {
  if (!in_norm_.front().fitted())
    throw std::logic_error("EnsembleModel::predict: normalizers not fitted");
  if (member < 0 || member >= cfg_.members)
    throw std::invalid_argument("EnsembleModel::predict: member index out of range");
  const auto& in_n = in_norm_[static_cast<std::size_t>(member)];
  const auto& out_n = out_norm_[static_cast<std::size_t>(member)];
  const Eigen::VectorXd raw =
      nets_[static_cast<std::size_t>(member)].forward(in_n.normalize(model_input(obs, action)));
  DeltaPrediction p;
  Eigen::VectorXd var_n(kObsDim);
  for (int i = 0; i < kObsDim; ++i)
    var_n(i) = std::exp(nn::soft_bound(raw(kObsDim + i), cfg_.logvar_min, cfg_.logvar_max));
  p.mean = out_n.denormalize(raw.head(kObsDim));
  p.var = out_n.denormalize_var(var_n);
  return p;
}

EnsembleModel::Sampled EnsembleModel::sample_delta(const Eigen::VectorXd& obs,
                                                   const Eigen::Vector4d& action,
                                                   Rng& rng) const {
  Sampled s;
  s.member = static_cast<int>(uniform_int(rng, static_cast<std::size_t>(cfg_.members)));
  const DeltaPrediction p = predict(s.member, obs, action);
  s.delta.resize(kObsDim);
  for (int i = 0; i < kObsDim; ++i) s.delta(i) = p.mean(i) + std::sqrt(p.var(i)) * normal(rng);
  return s;
}

double EnsembleModel::disagreement(const Eigen::VectorXd& obs,
                                   const Eigen::Vector4d& action) const {
  Eigen::MatrixXd means(kObsDim, cfg_.members);
  for (int m = 0; m < cfg_.members; ++m) means.col(m) = predict(m, obs, action).mean;
  const Eigen::VectorXd avg = means.rowwise().mean();
  double acc = 0.0;
  for (int i = 0; i < kObsDim; ++i) {
    double v = 0.0;
    for (int m = 0; m < cfg_.members; ++m) {
      const double d = means(i, m) - avg(i);
      v += d * d;
    }
    acc += std::sqrt(v / static_cast<double>(cfg_.members));
  }
  return acc / static_cast<double>(kObsDim);
}

RolloutStats branch_rollout(const EnsembleModel& model, const PolicySampler& policy,
                            const replay::ReplayBuffer& env, int n_starts, int k,
                            const sim::EnvConfig& env_cfg, replay::ModelBuffer& out, Rng& rng) {
  RolloutStats stats;
  for (int b = 0; b < n_starts; ++b) {
    const replay::AugmentedTransition& start = env.sample(rng);
    Eigen::VectorXd o = start.o_real.to_vector();
    const double h0 = start.h_setpoint;
    for (int step = 0; step < k; ++step) {
      const Eigen::Vector4d a = policy(o, rng);
      const EnsembleModel::Sampled s = model.sample_delta(o, a, rng);
      const Eigen::VectorXd o_next = o + s.delta;
      if (!o_next.allFinite()) {
        ++stats.truncated_branches;
        break;
      }
      const sim::Observation prev = sim::Observation::from_vector(o);
      const sim::Observation next = sim::Observation::from_vector(o_next);
      double r = sim::raw_reward(prev, next, h0, env_cfg.lambda_h);
      // Same shaping the real environment applies, minus waypoint completion
      // (imagined states carry no waypoint index) and without termination.
      if (std::abs(next.w) > 1.0 || std::abs(next.l) > 1.0)
        r += -10.0;
      else if (std::abs(next.w) < env_cfg.epsilon && std::abs(next.l) < env_cfg.epsilon)
        r += 10.0;
      out.push(replay::Transition{o, a, r, o_next, false});
      ++stats.transitions;
      o = o_next;
    }
  }
  return stats;
}

}  // namespace ipk::dynamics
