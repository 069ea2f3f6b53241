#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "ipk/config.hpp"
#include "ipk/metrics.hpp"
#include "json.hpp"

// End-to-end tests against the installed binary; the build stamps its path in.
#ifndef IPK_CLI_PATH
#error "IPK_CLI_PATH must point at the cli binary"
#endif

namespace {

namespace fs = std::filesystem;

fs::path scratch_root() {
  static const fs::path root =
      fs::temp_directory_path() / ("ipk_cli_suite_" + std::to_string(::getpid()));
  fs::create_directories(root);
  return root;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(IPK_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_tiny_config(const std::string& name, ipk::config::Mode mode) {
  ipk::config::ExperimentConfig cfg;
  cfg.mode = mode;
  cfg.seed = 404;
  cfg.epochs = 2;
  cfg.epoch_length = 25;
  cfg.task_length = 30;
  cfg.rollout_length = 2;
  cfg.model_train_frequency = 15;
  cfg.model_count = 2;
  cfg.batch_size = 12;
  cfg.initial_exploration_steps = 25;
  cfg.buffer_capacity = 2000;
  cfg.hidden_layers = 2;
  cfg.hidden_units = 12;
  cfg.model_grad_steps = 3;
  cfg.rollout_batch = 3;
  cfg.model_buffer_capacity = 400;
  cfg.env.n_waypoints = 40;
  const fs::path path = scratch_root() / name;
  cfg.save(path.string());
  return path;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("bad invocations fail without artifacts") {
    const auto log = scratch_root() / "bad.log";
    CHECK(run_cli("frobnicate", log) != 0);
    CHECK(run_cli("train", log) != 0);  // --config is required

    const fs::path out = scratch_root() / "never_created";
    CHECK(run_cli("train --config /no/such/config.json --out " + out.string(), log) == 1);
    CHECK_FALSE(fs::exists(out));

    // Well-formed file with an invalid value: rejected before any output.
    const fs::path cfg = scratch_root() / "invalid.json";
    std::ofstream(cfg) << R"({"gamma": 1.5})";
    CHECK(run_cli("train --config " + cfg.string() + " --out " + out.string(), log) == 1);
    CHECK_FALSE(fs::exists(out));
  }

  TEST_CASE("training writes the full artifact set") {
    const auto cfg = write_tiny_config("basic.json", ipk::config::Mode::kBasic);
    const fs::path out = scratch_root() / "run_basic";
    const auto log = scratch_root() / "basic.log";
    REQUIRE(run_cli("train --config " + cfg.string() + " --out " + out.string(), log) == 0);
    CHECK(slurp(log).find("run complete: " + out.string()) != std::string::npos);

    CHECK(fs::exists(out / "config.json"));
    CHECK(fs::exists(out / "checkpoint.json"));
    CHECK_FALSE(fs::exists(out / "update_metrics.csv"));  // rule mode has no learner
    CHECK_FALSE(fs::exists(out / "model_losses.csv"));
    CHECK_FALSE(fs::exists(out / "failure.json"));

    const auto t = ipk::metrics::read_csv((out / "metrics.csv").string());
    CHECK(t.columns ==
          std::vector<std::string>{"epoch", "return", "task_length", "mean_kl", "zeta_bas"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][0] == 1.0);
    CHECK(t.rows[1][0] == 2.0);
    CHECK(t.column("zeta_bas") == std::vector<double>{1.0, 1.0});
  }

  TEST_CASE("model-based modes write their extra logs") {
    const auto cfg = write_tiny_config("mbpo.json", ipk::config::Mode::kMbpo);
    const fs::path out = scratch_root() / "run_mbpo";
    const auto log = scratch_root() / "mbpo.log";
    REQUIRE(run_cli("train --config " + cfg.string() + " --out " + out.string(), log) == 0);

    CHECK(fs::exists(out / "update_metrics.csv"));
    const auto m = ipk::metrics::read_csv((out / "model_losses.csv").string());
    CHECK(m.columns == std::vector<std::string>{"step", "member", "nll"});
    CHECK(m.rows.size() > 0);
    const auto u = ipk::metrics::read_csv((out / "update_metrics.csv").string());
    CHECK(u.columns == std::vector<std::string>{"step",  "critic_loss", "actor_loss",
                                                "alpha", "zeta_bas",    "mean_kl"});
    CHECK(u.column("zeta_bas") == std::vector<double>(u.rows.size(), 0.0));
  }

  TEST_CASE("mode and seed overrides land in the saved config") {
    const auto cfg = write_tiny_config("override.json", ipk::config::Mode::kBasic);
    const fs::path out = scratch_root() / "run_override";
    const auto log = scratch_root() / "override.log";
    REQUIRE(run_cli("train --config " + cfg.string() + " --mode sac --seed 7 --out " +
                        out.string(),
                    log) == 0);

    const auto saved = ipk::config::ExperimentConfig::load((out / "config.json").string());
    CHECK(saved.mode == ipk::config::Mode::kSac);
    CHECK(saved.seed == 7);
    CHECK(saved.out_dir == out.string());
    CHECK(fs::exists(out / "update_metrics.csv"));
  }

  TEST_CASE("identical seeds reproduce metrics byte for byte") {
    const auto cfg = write_tiny_config("repeat.json", ipk::config::Mode::kSac);
    const fs::path out_a = scratch_root() / "run_a";
    const fs::path out_b = scratch_root() / "run_b";
    const auto log = scratch_root() / "repeat.log";
    REQUIRE(run_cli("train --config " + cfg.string() + " --out " + out_a.string(), log) == 0);
    REQUIRE(run_cli("train --config " + cfg.string() + " --out " + out_b.string(), log) == 0);

    CHECK(slurp(out_a / "metrics.csv") == slurp(out_b / "metrics.csv"));
    CHECK(slurp(out_a / "update_metrics.csv") == slurp(out_b / "update_metrics.csv"));
    REQUIRE_FALSE(slurp(out_a / "metrics.csv").empty());
  }

  TEST_CASE("relative output paths root under IPK_OUT_ROOT") {
    const auto cfg = write_tiny_config("rooted.json", ipk::config::Mode::kBasic);
    const fs::path root = scratch_root() / "out_root";
    const auto log = scratch_root() / "rooted.log";
    const std::string cmd = "IPK_OUT_ROOT=" + root.string() + " " + IPK_CLI_PATH +
                            " train --config " + cfg.string() + " --out nested/run > " +
                            log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    REQUIRE(WEXITSTATUS(status) == 0);
    CHECK(fs::exists(root / "nested/run/metrics.csv"));
  }

  TEST_CASE("eval reports deterministic per-episode results") {
    const auto cfg = write_tiny_config("evaltrain.json", ipk::config::Mode::kBasic);
    const fs::path out = scratch_root() / "run_eval";
    const auto log = scratch_root() / "evaltrain.log";
    REQUIRE(run_cli("train --config " + cfg.string() + " --out " + out.string(), log) == 0);

    const auto rep_log = scratch_root() / "eval.json";
    REQUIRE(run_cli("eval --checkpoint " + (out / "checkpoint.json").string() +
                        " --episodes 3 --seed 11",
                    rep_log) == 0);
    const auto rep = nlohmann::json::parse(slurp(rep_log));
    CHECK(rep.at("episodes").get<int>() == 3);
    CHECK(rep.at("mode").get<std::string>() == "basic");
    CHECK(rep.at("returns").size() == 3);
    CHECK(rep.at("task_lengths").size() == 3);
    CHECK(std::isfinite(rep.at("mean_return").get<double>()));
    CHECK(rep.at("mean_task_length").get<double>() > 0.0);

    const auto rep_log2 = scratch_root() / "eval2.json";
    REQUIRE(run_cli("eval --checkpoint " + (out / "checkpoint.json").string() +
                        " --episodes 3 --seed 11",
                    rep_log2) == 0);
    CHECK(slurp(rep_log) == slurp(rep_log2));

    CHECK(run_cli("eval --checkpoint /no/such.json --episodes 1 --seed 1", rep_log) == 1);
  }

  TEST_CASE("export smooths metrics and summarizes the run") {
    const fs::path dir = scratch_root() / "export_src";
    fs::create_directories(dir);
    std::ofstream(dir / "metrics.csv")
        << "epoch,return,task_length,mean_kl,zeta_bas\n"
        << "1,0,10,2,0.5\n"
        << "2,10,20,1,0.4\n"
        << "3,20,30,0.5,0.3\n";

    const auto log = scratch_root() / "export.log";
    REQUIRE(run_cli("export --run " + dir.string(), log) == 0);

    const auto t = ipk::metrics::read_csv((dir / "metrics_smoothed.csv").string());
    CHECK(t.column_index("return_smoothed") >= 0);
    CHECK(t.column_index("zeta_bas_smoothed") >= 0);
    const auto expect = ipk::metrics::smooth({0.0, 10.0, 20.0});
    const auto got = t.column("return_smoothed");
    REQUIRE(got.size() == expect.size());
    for (std::size_t i = 0; i < got.size(); ++i)
      CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-9));

    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary.at("epochs").get<int>() == 3);
    CHECK(summary.at("final_return").get<double>() == 20.0);
    CHECK(summary.at("final_zeta_bas").get<double>() == 0.3);
    CHECK(summary.at("mean_return").get<double>() == doctest::Approx(10.0));
    CHECK(summary.at("final_return_smoothed").get<double>() ==
          doctest::Approx(expect.back()).epsilon(1e-9));

    CHECK(run_cli("export --run " + (scratch_root() / "no_dir").string(), log) == 1);
  }
}
