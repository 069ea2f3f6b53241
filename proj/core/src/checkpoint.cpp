#include "ipk/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace ipk::checkpoint {

using nlohmann::json;

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vec_from_json(const json& a) {
  Eigen::VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  j["data"] = std::move(data);
  return j;
}

Eigen::MatrixXd mat_from_json(const json& j) {
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const json& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw std::runtime_error("checkpoint: matrix size mismatch");
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
  return m;
}

json mlp_to_json(const nn::Mlp& net) {
  json j;
  j["input"] = net.input_size();
  j["hidden"] = net.hidden_sizes();
  j["output"] = net.output_size();
  j["activation"] = nn::to_string(net.activation());
  json w = json::array(), b = json::array();
  for (const auto& m : net.weights()) w.push_back(mat_to_json(m));
  for (const auto& v : net.biases()) b.push_back(vec_to_json(v));
  j["weights"] = std::move(w);
  j["biases"] = std::move(b);
  return j;
}

nn::Mlp mlp_from_json(const json& j) {
  Rng dummy(0);
  nn::Mlp net(j.at("input").get<int>(), j.at("hidden").get<std::vector<int>>(),
              j.at("output").get<int>(), nn::activation_from_string(j.at("activation")), dummy);
  const json& w = j.at("weights");
  const json& b = j.at("biases");
  if (w.size() != net.weights().size() || b.size() != net.biases().size())
    throw std::runtime_error("checkpoint: network layer count mismatch");
  for (std::size_t i = 0; i < w.size(); ++i) net.weights()[i] = mat_from_json(w[i]);
  for (std::size_t i = 0; i < b.size(); ++i) net.biases()[i] = vec_from_json(b[i]);
  return net;
}

json adam_to_json(nn::AdamState& st) {
  json j;
  j["lr"] = st.learning_rate();
  j["t"] = st.step_count();
  json mw = json::array(), vw = json::array(), mb = json::array(), vb = json::array();
  for (const auto& m : st.first_moments()) mw.push_back(mat_to_json(m));
  for (const auto& m : st.second_moments()) vw.push_back(mat_to_json(m));
  for (const auto& v : st.first_moments_bias()) mb.push_back(vec_to_json(v));
  for (const auto& v : st.second_moments_bias()) vb.push_back(vec_to_json(v));
  j["mw"] = std::move(mw);
  j["vw"] = std::move(vw);
  j["mb"] = std::move(mb);
  j["vb"] = std::move(vb);
  return j;
}

nn::AdamState adam_from_json(const json& j, const nn::Mlp& net) {
  nn::AdamState st(net, j.at("lr").get<double>());
  st.set_step_count(j.at("t").get<std::int64_t>());
  const json& mw = j.at("mw");
  const json& vw = j.at("vw");
  const json& mb = j.at("mb");
  const json& vb = j.at("vb");
  for (std::size_t i = 0; i < mw.size(); ++i) st.first_moments()[i] = mat_from_json(mw[i]);
  for (std::size_t i = 0; i < vw.size(); ++i) st.second_moments()[i] = mat_from_json(vw[i]);
  for (std::size_t i = 0; i < mb.size(); ++i) st.first_moments_bias()[i] = vec_from_json(mb[i]);
  for (std::size_t i = 0; i < vb.size(); ++i) st.second_moments_bias()[i] = vec_from_json(vb[i]);
  return st;
}

json normalizer_to_json(const dynamics::Normalizer& n) {
  return json{{"mean", vec_to_json(n.mean())}, {"std", vec_to_json(n.std())},
              {"fitted", n.fitted()}};
}

void normalizer_from_json(const json& j, dynamics::Normalizer& n) {
  if (j.at("fitted").get<bool>()) n.restore(vec_from_json(j.at("mean")), vec_from_json(j.at("std")));
}

json rng_to_json(const agent::Trainer::RngStates& s) {
  return json{{"action", s.action}, {"update", s.update},   {"batch", s.batch},
              {"model", s.model},   {"rollout", s.rollout}, {"episode", s.episode}};
}

agent::Trainer::RngStates rng_from_json(const json& j) {
  agent::Trainer::RngStates s;
  s.action = j.at("action").get<std::string>();
  s.update = j.at("update").get<std::string>();
  s.batch = j.at("batch").get<std::string>();
  s.model = j.at("model").get<std::string>();
  s.rollout = j.at("rollout").get<std::string>();
  s.episode = j.at("episode").get<std::string>();
  return s;
}

}  // namespace

void save(const std::string& path, agent::Trainer& trainer) {
  json j;
  j["version"] = kVersion;
  j["config"] = json::parse(trainer.experiment_config().to_json());
  j["steps"] = trainer.steps_trained();
  j["zeta_bas"] = trainer.fusion().zeta_bas();
  const prior::AccuracyEstimate& est = trainer.accuracy();
  j["accuracy"] = json{{"mu", vec_to_json(est.mean)},
                       {"sigma2", vec_to_json(est.var)},
                       {"count", est.samples}};
  j["rng"] = rng_to_json(trainer.rng_states());

  if (policy::SacAgent* sac = trainer.sac()) {
    json s;
    s["actor"] = mlp_to_json(sac->actor());
    s["critic1"] = mlp_to_json(sac->critic1());
    s["critic2"] = mlp_to_json(sac->critic2());
    s["target1"] = mlp_to_json(sac->target1());
    s["target2"] = mlp_to_json(sac->target2());
    s["actor_opt"] = adam_to_json(sac->actor_opt());
    s["critic1_opt"] = adam_to_json(sac->critic1_opt());
    s["critic2_opt"] = adam_to_json(sac->critic2_opt());
    s["log_alpha"] = sac->log_alpha();
    s["alpha_opt"] = json{{"lr", sac->alpha_opt().learning_rate()},
                          {"t", sac->alpha_opt().step_count()},
                          {"m", sac->alpha_opt().first_moment()},
                          {"v", sac->alpha_opt().second_moment()}};
    j["sac"] = std::move(s);
  } else {
    j["sac"] = nullptr;
  }

  if (dynamics::EnsembleModel* ens = trainer.ensemble()) {
    json e;
    e["train_steps"] = ens->train_steps();
    json nets = json::array(), opts = json::array(), inn = json::array(), outn = json::array();
    for (auto& net : ens->nets()) nets.push_back(mlp_to_json(net));
    for (auto& opt : ens->optimizers()) opts.push_back(adam_to_json(opt));
    for (auto& n : ens->input_normalizers()) inn.push_back(normalizer_to_json(n));
    for (auto& n : ens->target_normalizers()) outn.push_back(normalizer_to_json(n));
    e["nets"] = std::move(nets);
    e["opts"] = std::move(opts);
    e["input_normalizers"] = std::move(inn);
    e["target_normalizers"] = std::move(outn);
    j["ensemble"] = std::move(e);
  } else {
    j["ensemble"] = nullptr;
  }

  std::ofstream out(path);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out << j.dump() << "\n";
}

Bundle load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("checkpoint: parse error: ") + e.what());
  }
  const int version = j.at("version").get<int>();
  if (version != kVersion)
    throw std::runtime_error("checkpoint: incompatible version " + std::to_string(version) +
                             " (expected " + std::to_string(kVersion) + ")");

  Bundle b;
  b.cfg = config::ExperimentConfig::from_json(j.at("config").dump());
  b.steps = j.at("steps").get<long>();
  b.zeta_bas = j.at("zeta_bas").get<double>();
  const json& acc = j.at("accuracy");
  b.accuracy.mean = vec_from_json(acc.at("mu"));
  b.accuracy.var = vec_from_json(acc.at("sigma2"));
  b.accuracy.samples = acc.at("count").get<int>();
  b.rng = rng_from_json(j.at("rng"));

  if (!j.at("sac").is_null()) {
    const json& s = j.at("sac");
    Rng dummy(0);
    b.sac = std::make_unique<policy::SacAgent>(b.cfg.sac_config(), dummy);
    b.sac->actor() = mlp_from_json(s.at("actor"));
    b.sac->critic1() = mlp_from_json(s.at("critic1"));
    b.sac->critic2() = mlp_from_json(s.at("critic2"));
    b.sac->target1() = mlp_from_json(s.at("target1"));
    b.sac->target2() = mlp_from_json(s.at("target2"));
    b.sac->actor_opt() = adam_from_json(s.at("actor_opt"), b.sac->actor());
    b.sac->critic1_opt() = adam_from_json(s.at("critic1_opt"), b.sac->critic1());
    b.sac->critic2_opt() = adam_from_json(s.at("critic2_opt"), b.sac->critic2());
    b.sac->set_log_alpha(s.at("log_alpha").get<double>());
    const json& ao = s.at("alpha_opt");
    b.sac->alpha_opt() = nn::ScalarAdam(ao.at("lr").get<double>());
    b.sac->alpha_opt().restore(ao.at("t").get<std::int64_t>(), ao.at("m").get<double>(),
                               ao.at("v").get<double>());
  }

  if (!j.at("ensemble").is_null()) {
    const json& e = j.at("ensemble");
    Rng dummy(0);
    b.ensemble = std::make_unique<dynamics::EnsembleModel>(b.cfg.dynamics_config(), dummy);
    const json& nets = e.at("nets");
    const json& opts = e.at("opts");
    const json& inn = e.at("input_normalizers");
    const json& outn = e.at("target_normalizers");
    if (static_cast<int>(nets.size()) != b.ensemble->member_count())
      throw std::runtime_error("checkpoint: ensemble member count mismatch");
    for (std::size_t m = 0; m < nets.size(); ++m) {
      b.ensemble->nets()[m] = mlp_from_json(nets[m]);
      b.ensemble->optimizers()[m] = adam_from_json(opts[m], b.ensemble->nets()[m]);
      normalizer_from_json(inn[m], b.ensemble->input_normalizers()[m]);
      normalizer_from_json(outn[m], b.ensemble->target_normalizers()[m]);
    }
    b.ensemble->set_train_steps(e.at("train_steps").get<std::int64_t>());
  }

  return b;
}

}  // namespace ipk::checkpoint
