#include "ipk/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace ipk::policy {

namespace {
constexpr double kLogTwoPi = 1.8378770664093453;  // log(2*pi)
constexpr double kSquashEps = 1e-6;
}  // namespace

FusionState::FusionState(double zeta_init, double learning_rate, double target_divergence)
    : zeta_bas_(zeta_init), lr_(learning_rate), target_divergence_(target_divergence) {
  if (zeta_init < 0.0 || zeta_init > 1.0)
    throw std::invalid_argument("FusionState: zeta_init outside [0, 1]");
  if (learning_rate <= 0.0) throw std::invalid_argument("FusionState: learning rate <= 0");
}

double FusionState::update(const std::vector<double>& kl_batch) {
  if (kl_batch.empty()) throw std::invalid_argument("FusionState::update: empty divergence batch");
  double mean = 0.0;
  for (double k : kl_batch) mean += k;
  mean /= static_cast<double>(kl_batch.size());
  zeta_bas_ = std::clamp(zeta_bas_ + lr_ * (mean + target_divergence_), 0.0, 1.0);
  return zeta_bas_;
}

void FusionState::set_zeta(double z) {
  if (z < 0.0 || z > 1.0) throw std::invalid_argument("FusionState::set_zeta: outside [0, 1]");
  zeta_bas_ = z;
}

SacAgent::SacAgent(SacConfig cfg, Rng& init_rng)
    : cfg_(std::move(cfg)),
      actor_(kObsDim, cfg_.hidden, 2 * kActDim, cfg_.activation, init_rng),
      critic1_(kObsDim + kActDim, cfg_.hidden, 1, cfg_.activation, init_rng),
      critic2_(kObsDim + kActDim, cfg_.hidden, 1, cfg_.activation, init_rng),
      target1_(critic1_),
      target2_(critic2_),
      actor_opt_(actor_, cfg_.learning_rate),
      critic1_opt_(critic1_, cfg_.learning_rate),
      critic2_opt_(critic2_, cfg_.learning_rate),
      log_alpha_(std::log(cfg_.init_alpha)),
      alpha_opt_(cfg_.learning_rate) {
  if (cfg_.init_alpha <= 0.0) throw std::invalid_argument("SacAgent: init_alpha must be positive");
}

double SacAgent::alpha() const { return std::exp(log_alpha_); }

gauss::DiagGaussian SacAgent::policy_distribution(const Eigen::VectorXd& obs) const {
  const nn::Vector out = actor_.forward(obs);
  Eigen::VectorXd mean(kActDim), var(kActDim);
  for (int i = 0; i < kActDim; ++i) {
    mean(i) = out(i);
    const double ls = nn::soft_bound(out(kActDim + i), cfg_.logstd_min, cfg_.logstd_max);
    var(i) = std::exp(2.0 * ls);
  }
  if (!mean.allFinite() || !var.allFinite())
    throw std::runtime_error("policy_distribution: non-finite actor output");
  return gauss::DiagGaussian(std::move(mean), std::move(var));
}

Eigen::Vector4d SacAgent::sample_action(const Eigen::VectorXd& obs, Rng& rng) const {
  const gauss::DiagGaussian g = policy_distribution(obs);
  Eigen::Vector4d a;
  for (int i = 0; i < kActDim; ++i)
    a(i) = std::tanh(g.mean()(i) + std::sqrt(g.var()(i)) * normal(rng));
  return a;
}

Eigen::Vector4d SacAgent::mean_action(const Eigen::VectorXd& obs) const {
  const gauss::DiagGaussian g = policy_distribution(obs);
  Eigen::Vector4d a;
  for (int i = 0; i < kActDim; ++i) a(i) = std::tanh(g.mean()(i));
  return a;
}

SacAgent::SquashedSample SacAgent::sample_batch(const nn::Matrix& obs, Rng& rng) const {
  const int n = static_cast<int>(obs.cols());
  const nn::Matrix out = actor_.forward(obs);
  SquashedSample s;
  s.u.resize(kActDim, n);
  s.a.resize(kActDim, n);
  s.log_pi_elems.resize(kActDim, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < kActDim; ++i) {
      const double mu = out(i, j);
      const double ls = nn::soft_bound(out(kActDim + i, j), cfg_.logstd_min, cfg_.logstd_max);
      const double xi = normal(rng);
      const double u = mu + std::exp(ls) * xi;
      const double a = std::tanh(u);
      s.u(i, j) = u;
      s.a(i, j) = a;
      s.log_pi_elems(i, j) =
          -0.5 * xi * xi - ls - 0.5 * kLogTwoPi - std::log(1.0 + kSquashEps - a * a);
    }
  }
  return s;
}

UpdateReport SacAgent::update(const std::vector<replay::Transition>& batch, Rng& rng) {
  UpdateReport rep;
  const int n = static_cast<int>(batch.size());
  if (n == 0) {
    rep.error = "empty batch";
    return rep;
  }

  nn::Matrix O(kObsDim, n), A(kActDim, n), On(kObsDim, n);
  Eigen::VectorXd R(n), notdone(n);
  for (int j = 0; j < n; ++j) {
    const replay::Transition& t = batch[static_cast<std::size_t>(j)];
    O.col(j) = t.obs;
    A.col(j) = t.action;
    On.col(j) = t.obs_next;
    R(j) = t.reward;
    notdone(j) = t.done ? 0.0 : 1.0;
  }

  try {
    // TD targets from the frozen target critics and a fresh policy sample.
    const SquashedSample next = sample_batch(On, rng);
    nn::Matrix xn(kObsDim + kActDim, n);
    xn << On, next.a;
    const nn::Matrix q1n = target1_.forward(xn);
    const nn::Matrix q2n = target2_.forward(xn);
    const double al = alpha();
    Eigen::VectorXd y(n);
    for (int j = 0; j < n; ++j) {
      const double qmin = std::min(q1n(0, j), q2n(0, j));
      const double logpi = next.log_pi_elems.col(j).sum();
      y(j) = R(j) + cfg_.gamma * notdone(j) * (qmin - al * logpi);
    }
    if (!y.allFinite()) throw std::runtime_error("non-finite TD target");

    // Twin-critic regression toward the shared target.
    nn::Matrix xq(kObsDim + kActDim, n);
    xq << O, A;
    const nn::Matrix ymat = y.transpose();
    double closs = 0.0;
    nn::Mlp* critics[2] = {&critic1_, &critic2_};
    nn::AdamState* copts[2] = {&critic1_opt_, &critic2_opt_};
    for (int c = 0; c < 2; ++c) {
      nn::MlpGrads grads = nn::MlpGrads::zeros_like(*critics[c]);
      nn::Tape tape;
      const auto q = tape.mlp(*critics[c], tape.constant(xq), &grads);
      const auto loss =
          tape.scale(tape.sum(tape.square(tape.sub(q, tape.constant(ymat)))), 1.0 / n);
      const double lv = tape.value(loss)(0, 0);
      if (!std::isfinite(lv)) throw std::runtime_error("non-finite critic loss");
      tape.backward(loss);
      copts[c]->step(*critics[c], grads);
      closs += 0.5 * lv;
    }
    rep.critic_loss = closs;

    // Actor: maximize min-Q minus entropy cost through the updated critics.
    nn::Matrix xi(kActDim, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < kActDim; ++i) xi(i, j) = normal(rng);

    nn::MlpGrads agrads = nn::MlpGrads::zeros_like(actor_);
    nn::Tape tape;
    const auto xo = tape.constant(O);
    const auto out = tape.mlp(actor_, xo, &agrads);
    const auto mu = tape.rows(out, 0, kActDim);
    const auto ls = tape.soft_bound(tape.rows(out, kActDim, kActDim), cfg_.logstd_min,
                                    cfg_.logstd_max);
    const auto noise = tape.constant(xi);
    const auto u = tape.add(mu, tape.mul(tape.exp(ls), noise));
    const auto a = tape.tanh(u);
    // log pi = sum_i [ -xi^2/2 - log sigma - log(2 pi)/2 - log(1 + eps - a^2) ]
    const auto sq_term =
        tape.log(tape.sub(tape.constant(nn::Matrix::Constant(kActDim, n, 1.0 + kSquashEps)),
                          tape.square(a)));
    const auto gauss_term = tape.add_scalar(
        tape.sub(tape.constant((-0.5 * xi.array().square()).matrix()), ls), -0.5 * kLogTwoPi);
    const auto log_pi = tape.sub(gauss_term, sq_term);
    const auto xc = tape.vcat(xo, a);
    const auto qmin = tape.min_elem(tape.mlp(critic1_, xc, nullptr),
                                    tape.mlp(critic2_, xc, nullptr));
    const auto loss = tape.scale(
        tape.sub(tape.scale(tape.sum(log_pi), alpha()), tape.sum(qmin)), 1.0 / n);
    const double lv = tape.value(loss)(0, 0);
    if (!std::isfinite(lv)) throw std::runtime_error("non-finite actor loss");
    rep.mean_log_pi = tape.value(log_pi).sum() / n;
    tape.backward(loss);
    actor_opt_.step(actor_, agrads);
    rep.actor_loss = lv;

    // Temperature: minimize -alpha (log pi + target entropy).
    const double alpha_grad = -alpha() * (rep.mean_log_pi + cfg_.target_entropy);
    log_alpha_ = alpha_opt_.step(log_alpha_, alpha_grad);
    rep.alpha = alpha();

    // Slow target tracking.
    nn::Mlp* pairs[2][2] = {{&critic1_, &target1_}, {&critic2_, &target2_}};
    for (auto& [src, dst] : pairs) {
      for (std::size_t li = 0; li < src->weights().size(); ++li) {
        dst->weights()[li] = cfg_.tau * src->weights()[li] + (1.0 - cfg_.tau) * dst->weights()[li];
        dst->biases()[li] = cfg_.tau * src->biases()[li] + (1.0 - cfg_.tau) * dst->biases()[li];
      }
    }
    rep.ok = true;
  } catch (const std::exception& e) {
    rep.ok = false;
    rep.error = e.what();
  }
  return rep;
}

gauss::DiagGaussian to_presquash(const gauss::DiagGaussian& bounded) {
  Eigen::VectorXd mean(bounded.dim());
  for (int i = 0; i < bounded.dim(); ++i) {
    const double m = std::clamp(bounded.mean()(i), -1.0 + 1e-6, 1.0 - 1e-6);
    mean(i) = std::atanh(m);
  }
  return gauss::DiagGaussian(std::move(mean), bounded.var());
}

FusionSample fuse_and_sample(const SacAgent& agent, const FusionState& fusion,
                             const gauss::DiagGaussian& g_bas, const Eigen::VectorXd& obs,
                             Rng& rng) {
  FusionSample s;
  s.g_gau = agent.policy_distribution(obs);
  s.g_fus = gauss::weighted_fuse(to_presquash(g_bas), s.g_gau, fusion.zeta_bas());
  // One noise draw feeds both samples so their difference reflects only the
  // distribution shift, not sampling luck.
  for (int i = 0; i < SacAgent::kActDim; ++i) {
    const double xi = normal(rng);
    s.a_fus(i) = std::tanh(s.g_fus.mean()(i) + std::sqrt(s.g_fus.var()(i)) * xi);
    s.a_gau(i) = std::tanh(s.g_gau.mean()(i) + std::sqrt(s.g_gau.var()(i)) * xi);
  }
  return s;
}

double augmented_reward_from_kl(double r_real, double kl, const FusionState& fusion) {
  return fusion.zeta_bas() * (-kl - fusion.target_divergence() + r_real) +
         fusion.zeta_real() * r_real;
}

double augmented_reward(double r_real, const gauss::DiagGaussian& g_bas_axis,
                        const gauss::DiagGaussian& g_gau_axis, const FusionState& fusion) {
  return augmented_reward_from_kl(r_real, gauss::kl_divergence(g_bas_axis, g_gau_axis), fusion);
}

}  // namespace ipk::policy
