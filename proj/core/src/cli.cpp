#include "ipk/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "ipk/checkpoint.hpp"
#include "ipk/metrics.hpp"

namespace ipk::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string resolve_out_dir(const std::string& requested) {
  const char* root = std::getenv("IPK_OUT_ROOT");
  if (root && *root && fs::path(requested).is_relative())
    return (fs::path(root) / requested).string();
  return requested;
}

int train_cmd(const TrainOptions& opt) {
  config::ExperimentConfig cfg;
  try {
    cfg = config::ExperimentConfig::load(opt.config_path);
    if (opt.mode) cfg.mode = config::mode_from_string(*opt.mode);
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.out_dir) cfg.out_dir = *opt.out_dir;
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  const fs::path out = resolve_out_dir(cfg.out_dir);
  agent::TrainHooks hooks;
  metrics::CsvWriter epoch_csv, update_csv, model_csv;
  try {
    fs::create_directories(out);
    cfg.out_dir = out.string();
    cfg.save((out / "config.json").string());

    agent::Trainer trainer(cfg);
    epoch_csv.open((out / "metrics.csv").string(), "epoch,return,task_length,mean_kl,zeta_bas");
    hooks.on_epoch = [&](const agent::EpochMetrics& m) {
      epoch_csv.row({static_cast<double>(m.epoch), m.epoch_return, m.task_length, m.mean_kl,
                     m.zeta_bas});
    };
    if (cfg.mode != config::Mode::kBasic) {
      update_csv.open((out / "update_metrics.csv").string(),
                      "step,critic_loss,actor_loss,alpha,zeta_bas,mean_kl");
      hooks.on_update = [&](long step, const policy::UpdateReport& rep, double zeta,
                            double mean_kl) {
        update_csv.row({static_cast<double>(step), rep.critic_loss, rep.actor_loss, rep.alpha,
                        zeta, mean_kl});
      };
    }
    if (cfg.mode == config::Mode::kIpk || cfg.mode == config::Mode::kMbpo) {
      model_csv.open((out / "model_losses.csv").string(), "step,member,nll");
      hooks.on_model_loss = [&](long step, int member, double nll) {
        model_csv.row({static_cast<double>(step), static_cast<double>(member), nll});
      };
    }

    try {
      trainer.train(hooks);
    } catch (const std::exception& e) {
      // Leave a diagnostic snapshot next to the partial artifacts.
      json snap{{"error", e.what()}, {"steps_trained", trainer.steps_trained()}};
      std::ofstream f(out / "failure.json");
      f << snap.dump(2) << "\n";
      std::cerr << "error: training aborted: " << e.what() << "\n";
      return 2;
    }
    checkpoint::save((out / "checkpoint.json").string(), trainer);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cout << "run complete: " << out.string() << "\n";
  return 0;
}

namespace {

Eigen::Vector4d deterministic_action(const checkpoint::Bundle& b, const sim::Observation& o) {
  const Eigen::Vector4d rule = prior::canonical_basic_action(o, b.cfg.basic);
  if (!b.sac) return rule;
  if (b.cfg.mode != config::Mode::kIpk) return b.sac->mean_action(o.to_vector());
  // Deployed fusion controller at its mean: fuse the rule prior with the
  // policy head at the saved coefficient, then squash.
  const gauss::DiagGaussian g_bas =
      prior::basic_distribution(rule, b.accuracy, b.cfg.basic.exploration_var);
  const gauss::DiagGaussian g_fus =
      gauss::weighted_fuse(policy::to_presquash(g_bas),
                           b.sac->policy_distribution(o.to_vector()), b.zeta_bas);
  Eigen::Vector4d a;
  for (int i = 0; i < 4; ++i) a(i) = std::tanh(g_fus.mean()(i));
  return a;
}

}  // namespace

int eval_cmd(const EvalOptions& opt) {
  try {
    const checkpoint::Bundle b = checkpoint::load(opt.checkpoint_path);
    sim::TendonEnv env(b.cfg.env_config());
    Rng episode_rng = make_stream(opt.seed, "eval-episode");

    std::vector<double> returns;
    std::vector<int> lengths;
    for (int ep = 0; ep < opt.episodes; ++ep) {
      env.reset(episode_rng());
      double ret = 0.0;
      int len = 0;
      while (!env.done()) {
        const sim::StepResult res = env.step(deterministic_action(b, env.observation()));
        ret += res.reward;
        ++len;
      }
      returns.push_back(ret);
      lengths.push_back(len);
    }

    json rep;
    rep["episodes"] = opt.episodes;
    rep["seed"] = opt.seed;
    rep["mode"] = config::to_string(b.cfg.mode);
    if (!returns.empty()) {
      double mean = 0.0, len_mean = 0.0;
      for (double r : returns) mean += r;
      mean /= returns.size();
      for (int l : lengths) len_mean += l;
      len_mean /= lengths.size();
      double var = 0.0;
      for (double r : returns) var += (r - mean) * (r - mean);
      var /= returns.size();
      rep["mean_return"] = mean;
      rep["std_return"] = std::sqrt(var);
      rep["mean_task_length"] = len_mean;
      rep["returns"] = returns;
      rep["task_lengths"] = lengths;
    }
    std::cout << rep.dump(2) << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int export_cmd(const std::string& run_dir) {
  try {
    const fs::path dir = run_dir;
    metrics::Table t = metrics::read_csv((dir / "metrics.csv").string());
    if (t.rows.empty()) throw std::runtime_error("metrics.csv has no rows in " + run_dir);

    const std::vector<std::string> to_smooth = {"return", "task_length", "mean_kl", "zeta_bas"};
    for (const auto& name : to_smooth) {
      if (t.column_index(name) < 0) continue;
      const std::vector<double> s = metrics::smooth(t.column(name));
      t.columns.push_back(name + "_smoothed");
      for (std::size_t i = 0; i < t.rows.size(); ++i) t.rows[i].push_back(s[i]);
    }
    metrics::write_csv((dir / "metrics_smoothed.csv").string(), t);

    json summary;
    summary["epochs"] = t.rows.size();
    auto last_of = [&](const std::string& name) { return t.column(name).back(); };
    summary["final_return"] = last_of("return");
    summary["final_return_smoothed"] = last_of("return_smoothed");
    summary["final_task_length"] = last_of("task_length");
    summary["final_mean_kl"] = last_of("mean_kl");
    summary["final_zeta_bas"] = last_of("zeta_bas");
    double mean_ret = 0.0;
    for (double r : t.column("return")) mean_ret += r;
    summary["mean_return"] = mean_ret / t.rows.size();
    std::ofstream f(dir / "summary.json");
    if (!f) throw std::runtime_error("cannot write summary.json in " + run_dir);
    f << summary.dump(2) << "\n";
    std::cout << "export complete: " << (dir / "metrics_smoothed.csv").string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int run(int argc, const char* const* argv) {
  CLI::App app{"tendon-robot target tracking: prior-fused model-based RL runner"};
  app.require_subcommand(1);

  TrainOptions topt;
  std::string mode_s, out_s;
  std::uint64_t seed_v = 0;
  CLI::App* train = app.add_subcommand("train", "run a training experiment");
  train->add_option("--config", topt.config_path, "experiment config JSON")->required();
  CLI::Option* mode_opt = train->add_option("--mode", mode_s, "override mode (ipk|mbpo|sac|basic)");
  CLI::Option* seed_opt = train->add_option("--seed", seed_v, "override master seed");
  CLI::Option* out_opt = train->add_option("--out", out_s, "override output directory");

  EvalOptions eopt;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint with the mean policy");
  eval->add_option("--checkpoint", eopt.checkpoint_path, "checkpoint JSON")->required();
  eval->add_option("--episodes", eopt.episodes, "number of evaluation episodes")->required();
  eval->add_option("--seed", eopt.seed, "evaluation seed")->required();

  std::string run_dir;
  CLI::App* exp = app.add_subcommand("export", "consolidate metrics of a finished run");
  exp->add_option("--run", run_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (train->parsed()) {
    if (*mode_opt) topt.mode = mode_s;
    if (*seed_opt) topt.seed = seed_v;
    if (*out_opt) topt.out_dir = out_s;
    return train_cmd(topt);
  }
  if (eval->parsed()) return eval_cmd(eopt);
  return export_cmd(run_dir);
}

}  // namespace ipk::cli
