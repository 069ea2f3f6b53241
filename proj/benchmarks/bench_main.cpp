#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "ipk/gauss.hpp"
#include "ipk/nn.hpp"
#include "ipk/policy.hpp"
#include "ipk/replay.hpp"
#include "ipk/rng.hpp"
#include "ipk/sim.hpp"

namespace {

void bm_forward_kinematics(benchmark::State& state) {
  ipk::sim::EnvConfig cfg;
  Eigen::Vector4d acc(0.3, -0.2, 0.1, 0.4);
  for (auto _ : state) {
    auto robot = ipk::sim::forward_kinematics(acc, cfg);
    benchmark::DoNotOptimize(robot.tip.position);
  }
}
BENCHMARK(bm_forward_kinematics);

void bm_env_step(benchmark::State& state) {
  ipk::sim::EnvConfig cfg;
  ipk::sim::TendonEnv env(cfg);
  std::uint64_t seed = 7;
  env.reset(seed);
  Eigen::Vector4d a(0.01, -0.01, 0.02, 0.0);
  for (auto _ : state) {
    if (env.done()) env.reset(++seed);
    auto res = env.step(a);
    benchmark::DoNotOptimize(res.reward);
    a = -a;
  }
}
BENCHMARK(bm_env_step);

void bm_mlp_forward_batch256(benchmark::State& state) {
  ipk::Rng rng(1);
  ipk::nn::Mlp net(7, {256, 256}, 8, ipk::nn::Activation::kSigmoid, rng);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(7, 256);
  for (auto _ : state) {
    Eigen::MatrixXd y = net.forward(x);
    benchmark::DoNotOptimize(y);
  }
}
BENCHMARK(bm_mlp_forward_batch256);

void bm_tape_backward(benchmark::State& state) {
  ipk::Rng rng(2);
  ipk::nn::Mlp net(7, {64, 64}, 8, ipk::nn::Activation::kSigmoid, rng);
  ipk::nn::MlpGrads grads = ipk::nn::MlpGrads::zeros_like(net);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(7, 64);
  for (auto _ : state) {
    grads.set_zero();
    ipk::nn::Tape tape;
    auto xi = tape.input(x);
    auto y = tape.mlp(net, xi, &grads);
    auto loss = tape.sum(tape.square(y));
    tape.backward(loss);
    benchmark::DoNotOptimize(grads.w.back());
  }
}
BENCHMARK(bm_tape_backward);

void bm_gauss_fuse(benchmark::State& state) {
  ipk::gauss::DiagGaussian a{Eigen::Vector4d(0.1, 0.2, -0.1, 0.3),
                             Eigen::Vector4d(0.5, 0.4, 0.3, 0.2)};
  ipk::gauss::DiagGaussian b{Eigen::Vector4d(-0.2, 0.1, 0.2, -0.3),
                             Eigen::Vector4d(0.2, 0.3, 0.4, 0.5)};
  for (auto _ : state) {
    auto f = ipk::gauss::kalman_fuse(a, b);
    benchmark::DoNotOptimize(f.mean());
  }
}
BENCHMARK(bm_gauss_fuse);

void bm_sac_update(benchmark::State& state) {
  ipk::policy::SacConfig cfg;
  cfg.hidden = {64, 64};
  ipk::Rng init(3);
  ipk::policy::SacAgent agent(cfg, init);
  ipk::Rng rng(4);
  std::vector<ipk::replay::Transition> batch;
  for (int i = 0; i < 64; ++i) {
    ipk::replay::Transition t;
    t.obs = Eigen::VectorXd::Random(7);
    t.action = Eigen::Vector4d::Random() * 0.9;
    t.reward = ipk::uniform(rng, -1.0, 1.0);
    t.obs_next = Eigen::VectorXd::Random(7);
    t.done = false;
    batch.push_back(t);
  }
  for (auto _ : state) {
    auto rep = agent.update(batch, rng);
    benchmark::DoNotOptimize(rep.critic_loss);
  }
}
BENCHMARK(bm_sac_update);

}  // namespace

BENCHMARK_MAIN();
