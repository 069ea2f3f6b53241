#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "ipk/agent.hpp"
#include "ipk/checkpoint.hpp"
#include "ipk/config.hpp"
#include "ipk/metrics.hpp"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;

fs::path temp_file(const std::string& stem) {
  return fs::temp_directory_path() / ("ipk_test_" + stem + "_" + std::to_string(::getpid()));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ipk::config::ExperimentConfig tiny_run_config(ipk::config::Mode mode, std::uint64_t seed) {
  ipk::config::ExperimentConfig cfg;
  cfg.mode = mode;
  cfg.seed = seed;
  cfg.epochs = 1;
  cfg.epoch_length = 30;
  cfg.task_length = 40;
  cfg.rollout_length = 2;
  cfg.model_train_frequency = 15;
  cfg.model_count = 2;
  cfg.batch_size = 12;
  cfg.initial_exploration_steps = 30;
  cfg.buffer_capacity = 2000;
  cfg.hidden_layers = 2;
  cfg.hidden_units = 12;
  cfg.model_grad_steps = 3;
  cfg.rollout_batch = 3;
  cfg.model_buffer_capacity = 500;
  cfg.env.n_waypoints = 50;
  return cfg;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("defaults reproduce the reference hyperparameters") {
    ipk::config::ExperimentConfig c;
    CHECK(c.mode == ipk::config::Mode::kIpk);
    CHECK(c.epochs == 10);
    CHECK(c.epoch_length == 1000);
    CHECK(c.task_length == 300);
    CHECK(c.rollout_length == 20);
    CHECK(c.model_train_frequency == 250);
    CHECK(c.model_count == 7);
    CHECK(c.batch_size == 256);
    CHECK(c.initial_exploration_steps == 600);
    CHECK(c.sac_updates_per_step == 1);
    CHECK(c.buffer_capacity == 1000000);
    CHECK(c.learning_rate == 3e-4);
    CHECK(c.gamma == 0.99);
    CHECK(c.target_entropy == -2.0);
    CHECK(c.target_divergence == -1.5);
    CHECK(c.hidden_layers == 2);
    CHECK(c.hidden_units == 256);
    CHECK(c.activation == "sigmoid");
    CHECK(c.basic.magnitude == 0.6);
    CHECK(c.basic.deadband == 0.05);
    CHECK(c.basic.exploration_var == 1e-2);
    CHECK(c.env.fov == doctest::Approx(1.0471975511965976).epsilon(1e-15));
    CHECK(c.env.section_length == 0.2);
    CHECK(c.env.bend_gain == 0.9);
    CHECK(c.env.step_gain == 0.05);
    CHECK(c.env.acc_limit == 1.5);
    CHECK(c.env.lambda_h == 1.0);
    CHECK(c.env.epsilon == 0.05);
    CHECK_NOTHROW(c.validate());
  }

  TEST_CASE("mode strings round trip and reject unknowns") {
    using ipk::config::Mode;
    for (auto m : {Mode::kIpk, Mode::kMbpo, Mode::kSac, Mode::kBasic})
      CHECK(ipk::config::mode_from_string(ipk::config::to_string(m)) == m);
    CHECK_THROWS_AS(ipk::config::mode_from_string("dreamer"), std::invalid_argument);
  }

  TEST_CASE("derived configs propagate shared fields") {
    auto c = tiny_run_config(ipk::config::Mode::kIpk, 1);
    c.hidden_layers = 3;
    c.hidden_units = 20;
    CHECK(c.hidden() == std::vector<int>{20, 20, 20});

    const auto env = c.env_config();
    CHECK(env.task_length == c.task_length);
    CHECK(env.n_waypoints == 50);

    const auto sac = c.sac_config();
    CHECK(sac.hidden == c.hidden());
    CHECK(sac.gamma == c.gamma);
    CHECK(sac.tau == c.tau);
    CHECK(sac.target_entropy == c.target_entropy);

    const auto dyn = c.dynamics_config();
    CHECK(dyn.members == c.model_count);
    CHECK(dyn.hidden == c.hidden());
    CHECK(dyn.learning_rate == c.learning_rate);
  }

  TEST_CASE("json round trip preserves every field") {
    auto c = tiny_run_config(ipk::config::Mode::kMbpo, 77);
    c.out_dir = "runs/x";
    c.gamma = 0.97;
    c.zeta_init = 0.5;
    c.basic.deadband = 0.08;
    c.env.bend_gain = 0.85;
    c.env.trajectory.shell_r_min = 0.35;
    c.env.trajectory.shell_r_max = 0.41;

    const auto d = ipk::config::ExperimentConfig::from_json(c.to_json());
    CHECK(d.mode == c.mode);
    CHECK(d.seed == c.seed);
    CHECK(d.out_dir == c.out_dir);
    CHECK(d.gamma == c.gamma);
    CHECK(d.zeta_init == c.zeta_init);
    CHECK(d.epoch_length == c.epoch_length);
    CHECK(d.basic.deadband == c.basic.deadband);
    CHECK(d.env.bend_gain == c.env.bend_gain);
    CHECK(d.env.trajectory.shell_r_max == c.env.trajectory.shell_r_max);
    CHECK(d.to_json() == c.to_json());
  }

  TEST_CASE("partial json falls back to defaults and ignores unknown keys") {
    const auto c = ipk::config::ExperimentConfig::from_json(
        R"({"mode":"sac","epochs":3,"env":{"bend_gain":0.5},"not_a_key":1})");
    CHECK(c.mode == ipk::config::Mode::kSac);
    CHECK(c.epochs == 3);
    CHECK(c.epoch_length == 1000);
    CHECK(c.env.bend_gain == 0.5);
    CHECK(c.env.step_gain == 0.05);
  }

  TEST_CASE("malformed json and invalid values are rejected") {
    using ipk::config::ExperimentConfig;
    CHECK_THROWS_AS(ExperimentConfig::from_json("{nope"), std::invalid_argument);
    CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"mode":"foo"})"), std::invalid_argument);
    CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"epochs":0})"), std::invalid_argument);
    CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"gamma":1.0})"), std::invalid_argument);
    CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"zeta_init":1.5})"), std::invalid_argument);
    CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"tau":0.0})"), std::invalid_argument);
    CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"logstd_min":3.0})"), std::invalid_argument);
    CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"env":{"fov":3.5}})"), std::invalid_argument);
    CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"basic":{"magnitude":0.0}})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"model_fraction":1.2})"),
                    std::invalid_argument);
  }

  TEST_CASE("desk preset shrinks the run but keeps optimizer work at full scale") {
    const auto c = ipk::config::ExperimentConfig::desk_preset();
    CHECK(c.epochs == 10);
    CHECK(c.epoch_length == 200);
    CHECK(c.task_length == 100);
    CHECK(c.hidden_units == 64);
    CHECK(c.model_grad_steps == 60);
    CHECK(c.rollout_batch == 32);
    CHECK(c.env.n_waypoints == 100);
    CHECK(c.sac_updates_per_step == 5);
    CHECK(c.logstd_max == -1.0);
    CHECK(c.basic.exploration_var == 4e-2);
    CHECK(c.learning_rate == 3e-4);
    CHECK(c.batch_size == 256);
    CHECK_NOTHROW(c.validate());
  }

  TEST_CASE("config files save and load") {
    const auto path = temp_file("cfg.json");
    auto c = tiny_run_config(ipk::config::Mode::kBasic, 9);
    c.save(path.string());
    const auto d = ipk::config::ExperimentConfig::load(path.string());
    CHECK(d.to_json() == c.to_json());
    fs::remove(path);
    CHECK_THROWS_AS(ipk::config::ExperimentConfig::load(path.string()), std::runtime_error);
  }

  TEST_CASE("csv cells format with stable precision") {
    CHECK(ipk::metrics::format_cell(2.0) == "2");
    CHECK(ipk::metrics::format_cell(2.5) == "2.5");
    CHECK(ipk::metrics::format_cell(-0.25) == "-0.25");
    CHECK(ipk::metrics::format_cell(1e-9) == "1e-09");
  }

  TEST_CASE("csv writer output parses back identically") {
    const auto path = temp_file("metrics.csv");
    {
      ipk::metrics::CsvWriter w(path.string(), "alpha,beta");
      w.row({1.0, 2.5});
      w.row({-3.0, 0.125});
    }
    CHECK(slurp(path) == "alpha,beta\n1,2.5\n-3,0.125\n");

    const auto t = ipk::metrics::read_csv(path.string());
    REQUIRE(t.columns == std::vector<std::string>{"alpha", "beta"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0] == std::vector<double>{1.0, 2.5});
    CHECK(t.rows[1] == std::vector<double>{-3.0, 0.125});
    CHECK(t.column_index("beta") == 1);
    CHECK(t.column_index("gamma") == -1);
    CHECK(t.column("beta") == std::vector<double>{2.5, 0.125});
    fs::remove(path);
  }

  TEST_CASE("csv reader rejects missing, empty, and ragged files") {
    const auto path = temp_file("bad.csv");
    CHECK_THROWS_AS(ipk::metrics::read_csv(path.string()), std::runtime_error);

    std::ofstream(path) << "";
    CHECK_THROWS_AS(ipk::metrics::read_csv(path.string()), std::runtime_error);

    std::ofstream(path) << "a,b\n1\n";
    CHECK_THROWS_AS(ipk::metrics::read_csv(path.string()), std::runtime_error);
    fs::remove(path);
  }

  TEST_CASE("smoothing follows the fixed blend") {
    using ipk::metrics::smooth;
    CHECK(smooth({}).empty());
    CHECK(smooth({4.0}) == std::vector<double>{4.0});
    CHECK(smooth({2.0, 2.0, 2.0}) == std::vector<double>{2.0, 2.0, 2.0});

    const auto s = smooth({0.0, 1.0});
    REQUIRE(s.size() == 2);
    CHECK(s[0] == 0.0);
    CHECK(s[1] == doctest::Approx(0.1).epsilon(1e-15));

    const auto fast = smooth({0.0, 1.0}, 0.5);
    CHECK(fast[1] == doctest::Approx(0.5).epsilon(1e-15));
  }

  TEST_CASE("checkpoint round trips a trained run") {
    auto cfg = tiny_run_config(ipk::config::Mode::kIpk, 123);
    ipk::agent::Trainer trainer(cfg);
    trainer.train();

    const auto path = temp_file("ckpt.json");
    ipk::checkpoint::save(path.string(), trainer);
    auto bundle = ipk::checkpoint::load(path.string());

    CHECK(bundle.cfg.to_json() == trainer.experiment_config().to_json());
    CHECK(bundle.steps == trainer.steps_trained());
    CHECK(bundle.zeta_bas == trainer.fusion().zeta_bas());
    CHECK(bundle.accuracy.samples == trainer.accuracy().samples);
    CHECK(bundle.accuracy.mean == trainer.accuracy().mean);
    CHECK(bundle.accuracy.var == trainer.accuracy().var);

    REQUIRE(bundle.sac != nullptr);
    const auto& w0 = trainer.sac()->actor().weights();
    const auto& w1 = bundle.sac->actor().weights();
    REQUIRE(w0.size() == w1.size());
    for (std::size_t i = 0; i < w0.size(); ++i) CHECK(w0[i] == w1[i]);
    CHECK(bundle.sac->log_alpha() == trainer.sac()->log_alpha());

    Eigen::VectorXd probe(7);
    probe << 0.3, -0.2, 0.55, 0.1, 0.0, -0.1, 0.05;
    CHECK(bundle.sac->mean_action(probe) == trainer.sac()->mean_action(probe));

    REQUIRE(bundle.ensemble != nullptr);
    CHECK(bundle.ensemble->member_count() == cfg.model_count);
    CHECK(bundle.ensemble->train_steps() == trainer.ensemble()->train_steps());
    const auto pred0 = trainer.ensemble()->predict(0, probe, Eigen::Vector4d(0.1, 0, -0.1, 0.2));
    const auto pred1 = bundle.ensemble->predict(0, probe, Eigen::Vector4d(0.1, 0, -0.1, 0.2));
    CHECK(pred0.mean == pred1.mean);
    CHECK(pred0.var == pred1.var);

    const auto states = trainer.rng_states();
    CHECK(bundle.rng.action == states.action);
    CHECK(bundle.rng.episode == states.episode);
    fs::remove(path);
  }

  TEST_CASE("checkpoint of the rule-only mode carries no learners") {
    auto cfg = tiny_run_config(ipk::config::Mode::kBasic, 5);
    ipk::agent::Trainer trainer(cfg);
    trainer.train();

    const auto path = temp_file("ckpt_basic.json");
    ipk::checkpoint::save(path.string(), trainer);
    const auto bundle = ipk::checkpoint::load(path.string());
    CHECK(bundle.sac == nullptr);
    CHECK(bundle.ensemble == nullptr);
    CHECK(bundle.zeta_bas == trainer.fusion().zeta_bas());
    CHECK(bundle.steps == trainer.steps_trained());
    fs::remove(path);
  }

  TEST_CASE("checkpoint version mismatch is rejected") {
    auto cfg = tiny_run_config(ipk::config::Mode::kBasic, 6);
    ipk::agent::Trainer trainer(cfg);
    trainer.train();

    const auto path = temp_file("ckpt_tamper.json");
    ipk::checkpoint::save(path.string(), trainer);
    auto j = nlohmann::json::parse(slurp(path));
    j["version"] = 99;
    std::ofstream(path) << j.dump();
    CHECK_THROWS(ipk::checkpoint::load(path.string()));
    fs::remove(path);
  }
}
