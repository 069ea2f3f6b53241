#include "ipk/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace ipk::config {

using nlohmann::json;

const char* to_string(Mode m) {
  switch (m) {
    case Mode::kIpk: return "ipk";
    case Mode::kMbpo: return "mbpo";
    case Mode::kSac: return "sac";
    case Mode::kBasic: return "basic";
  }
  return "?";
}

Mode mode_from_string(const std::string& s) {
  if (s == "ipk") return Mode::kIpk;
  if (s == "mbpo") return Mode::kMbpo;
  if (s == "sac") return Mode::kSac;
  if (s == "basic") return Mode::kBasic;
  throw std::invalid_argument("unknown mode '" + s + "' (expected ipk|mbpo|sac|basic)");
}

std::vector<int> ExperimentConfig::hidden() const {
  return std::vector<int>(static_cast<std::size_t>(hidden_layers), hidden_units);
}

nn::Activation ExperimentConfig::activation_enum() const {
  return nn::activation_from_string(activation);
}

sim::EnvConfig ExperimentConfig::env_config() const {
  sim::EnvConfig e = env;
  e.task_length = task_length;
  return e;
}

policy::SacConfig ExperimentConfig::sac_config() const {
  policy::SacConfig c;
  c.hidden = hidden();
  c.activation = activation_enum();
  c.learning_rate = learning_rate;
  c.gamma = gamma;
  c.tau = tau;
  c.target_entropy = target_entropy;
  c.logstd_min = logstd_min;
  c.logstd_max = logstd_max;
  c.init_alpha = init_alpha;
  return c;
}

dynamics::DynamicsConfig ExperimentConfig::dynamics_config() const {
  dynamics::DynamicsConfig c;
  c.members = model_count;
  c.hidden = hidden();
  c.activation = activation_enum();
  c.learning_rate = learning_rate;
  return c;
}

void ExperimentConfig::validate() const {
  auto positive = [](long long v, const char* name) {
    if (v <= 0) throw std::invalid_argument(std::string(name) + " must be positive");
  };
  positive(epochs, "epochs");
  positive(epoch_length, "epoch_length");
  positive(task_length, "task_length");
  positive(model_train_frequency, "model_train_frequency");
  positive(model_count, "model_count");
  positive(batch_size, "batch_size");
  positive(sac_updates_per_step, "sac_updates_per_step");
  positive(hidden_layers, "hidden_layers");
  positive(hidden_units, "hidden_units");
  positive(static_cast<long long>(buffer_capacity), "buffer_capacity");
  positive(static_cast<long long>(model_buffer_capacity), "model_buffer_capacity");
  if (rollout_length < 0) throw std::invalid_argument("rollout_length must be >= 0");
  if (initial_exploration_steps < 0)
    throw std::invalid_argument("initial_exploration_steps must be >= 0");
  if (learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be positive");
  if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("gamma must lie in [0, 1)");
  if (zeta_init < 0.0 || zeta_init > 1.0)
    throw std::invalid_argument("zeta_init must lie in [0, 1]");
  if (zeta_lr <= 0.0) throw std::invalid_argument("zeta_lr must be positive");
  if (model_fraction < 0.0 || model_fraction > 1.0)
    throw std::invalid_argument("model_fraction must lie in [0, 1]");
  if (tau <= 0.0 || tau > 1.0) throw std::invalid_argument("tau must lie in (0, 1]");
  if (init_alpha <= 0.0) throw std::invalid_argument("init_alpha must be positive");
  if (logstd_min >= logstd_max) throw std::invalid_argument("logstd_min must be < logstd_max");
  if (env.fov <= 0.0 || env.fov >= M_PI) throw std::invalid_argument("env.fov must lie in (0, pi)");
  if (env.trajectory.shell_r_min >= env.trajectory.shell_r_max)
    throw std::invalid_argument("env shell radii must satisfy r_min < r_max");
  if (basic.magnitude <= 0.0 || basic.magnitude > 1.0)
    throw std::invalid_argument("basic.magnitude must lie in (0, 1]");
  mode_from_string(to_string(mode));  // exhaustiveness guard
}

namespace {

json env_to_json(const sim::EnvConfig& e) {
  return json{{"fov", e.fov},
              {"section_length", e.section_length},
              {"bend_gain", e.bend_gain},
              {"step_gain", e.step_gain},
              {"acc_limit", e.acc_limit},
              {"lambda_h", e.lambda_h},
              {"epsilon", e.epsilon},
              {"n_waypoints", e.n_waypoints},
              {"trajectory",
               {{"shell_r_min", e.trajectory.shell_r_min},
                {"shell_r_max", e.trajectory.shell_r_max},
                {"max_polar_angle", e.trajectory.max_polar_angle},
                {"control_points", e.trajectory.control_points},
                {"control_angle_step", e.trajectory.control_angle_step},
                {"max_waypoint_step", e.trajectory.max_waypoint_step}}}};
}

void env_from_json(const json& j, sim::EnvConfig& e) {
  e.fov = j.value("fov", e.fov);
  e.section_length = j.value("section_length", e.section_length);
  e.bend_gain = j.value("bend_gain", e.bend_gain);
  e.step_gain = j.value("step_gain", e.step_gain);
  e.acc_limit = j.value("acc_limit", e.acc_limit);
  e.lambda_h = j.value("lambda_h", e.lambda_h);
  e.epsilon = j.value("epsilon", e.epsilon);
  e.n_waypoints = j.value("n_waypoints", e.n_waypoints);
  if (j.contains("trajectory")) {
    const json& t = j.at("trajectory");
    e.trajectory.shell_r_min = t.value("shell_r_min", e.trajectory.shell_r_min);
    e.trajectory.shell_r_max = t.value("shell_r_max", e.trajectory.shell_r_max);
    e.trajectory.max_polar_angle = t.value("max_polar_angle", e.trajectory.max_polar_angle);
    e.trajectory.control_points = t.value("control_points", e.trajectory.control_points);
    e.trajectory.control_angle_step =
        t.value("control_angle_step", e.trajectory.control_angle_step);
    e.trajectory.max_waypoint_step = t.value("max_waypoint_step", e.trajectory.max_waypoint_step);
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config parse error: ") + e.what());
  }
  ExperimentConfig c;
  if (j.contains("mode")) c.mode = mode_from_string(j.at("mode").get<std::string>());
  c.seed = j.value("seed", c.seed);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.epochs = j.value("epochs", c.epochs);
  c.epoch_length = j.value("epoch_length", c.epoch_length);
  c.task_length = j.value("task_length", c.task_length);
  c.rollout_length = j.value("rollout_length", c.rollout_length);
  c.model_train_frequency = j.value("model_train_frequency", c.model_train_frequency);
  c.model_count = j.value("model_count", c.model_count);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.initial_exploration_steps = j.value("initial_exploration_steps", c.initial_exploration_steps);
  c.buffer_capacity = j.value("buffer_capacity", c.buffer_capacity);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.gamma = j.value("gamma", c.gamma);
  c.target_entropy = j.value("target_entropy", c.target_entropy);
  c.target_divergence = j.value("target_divergence", c.target_divergence);
  c.hidden_layers = j.value("hidden_layers", c.hidden_layers);
  c.hidden_units = j.value("hidden_units", c.hidden_units);
  c.activation = j.value("activation", c.activation);
  c.zeta_init = j.value("zeta_init", c.zeta_init);
  c.zeta_lr = j.value("zeta_lr", c.zeta_lr);
  c.model_fraction = j.value("model_fraction", c.model_fraction);
  c.sac_updates_per_step = j.value("sac_updates_per_step", c.sac_updates_per_step);
  c.model_grad_steps = j.value("model_grad_steps", c.model_grad_steps);
  c.rollout_batch = j.value("rollout_batch", c.rollout_batch);
  c.model_buffer_capacity = j.value("model_buffer_capacity", c.model_buffer_capacity);
  c.init_alpha = j.value("init_alpha", c.init_alpha);
  c.tau = j.value("tau", c.tau);
  c.logstd_min = j.value("logstd_min", c.logstd_min);
  c.logstd_max = j.value("logstd_max", c.logstd_max);
  if (j.contains("basic")) {
    const json& b = j.at("basic");
    c.basic.magnitude = b.value("magnitude", c.basic.magnitude);
    c.basic.deadband = b.value("deadband", c.basic.deadband);
    c.basic.exploration_var = b.value("exploration_var", c.basic.exploration_var);
  }
  if (j.contains("env")) env_from_json(j.at("env"), c.env);
  c.validate();
  return c;
}

std::string ExperimentConfig::to_json() const {
  json j{{"mode", to_string(mode)},
         {"seed", seed},
         {"out_dir", out_dir},
         {"epochs", epochs},
         {"epoch_length", epoch_length},
         {"task_length", task_length},
         {"rollout_length", rollout_length},
         {"model_train_frequency", model_train_frequency},
         {"model_count", model_count},
         {"batch_size", batch_size},
         {"initial_exploration_steps", initial_exploration_steps},
         {"buffer_capacity", buffer_capacity},
         {"learning_rate", learning_rate},
         {"gamma", gamma},
         {"target_entropy", target_entropy},
         {"target_divergence", target_divergence},
         {"hidden_layers", hidden_layers},
         {"hidden_units", hidden_units},
         {"activation", activation},
         {"zeta_init", zeta_init},
         {"zeta_lr", zeta_lr},
         {"model_fraction", model_fraction},
         {"sac_updates_per_step", sac_updates_per_step},
         {"model_grad_steps", model_grad_steps},
         {"rollout_batch", rollout_batch},
         {"model_buffer_capacity", model_buffer_capacity},
         {"init_alpha", init_alpha},
         {"tau", tau},
         {"logstd_min", logstd_min},
         {"logstd_max", logstd_max},
         {"basic",
          {{"magnitude", basic.magnitude},
           {"deadband", basic.deadband},
           {"exploration_var", basic.exploration_var}}},
         {"env", env_to_json(env)}};
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void ExperimentConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file: " + path);
  out << to_json() << "\n";
}

ExperimentConfig ExperimentConfig::desk_preset() {
  ExperimentConfig c;
  c.epochs = 10;
  c.epoch_length = 200;
  c.task_length = 100;
  c.hidden_units = 64;
  c.model_grad_steps = 60;
  c.rollout_batch = 32;
  c.env.n_waypoints = 100;
  // One-fifth the environment steps of the full schedule, so five gradient
  // updates per step keep the total optimizer work (and the temperature /
  // exploitation-coefficient annealing driven by it) at full scale.
  c.sac_updates_per_step = 5;
  // Keep the initial policy spread near the rule prior's scale instead of
  // waiting for the temperature to anneal it there: cap the log-std and widen
  // the rule's idle-motor variance. The divergence then starts near its
  // setpoint, so the exploitation coefficient begins adapting while the
  // executed data still anchors the critics.
  c.logstd_max = -1.0;
  c.basic.exploration_var = 4e-2;
  return c;
}

}  // namespace ipk::config
