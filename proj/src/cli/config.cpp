#include "cbm/cli/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace cbm::cli {

namespace {

using Setter = std::function<void(YAML::Node const &)>;

class Reader
{
public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(YAML::Node const &node, std::string const &msg) const
  {
    auto const mark = node.Mark();
    throw ConfigParseError(source_, mark.is_null() ? 0 : static_cast<std::size_t>(mark.line) + 1, msg);
  }

  template <typename T>
  T as(YAML::Node const &node, std::string const &key) const
  {
    if (!node.IsScalar()) {
      fail(node, fmt::format("'{}' must be a scalar", key));
    }
    try {
      return node.as<T>();
    } catch (YAML::Exception const &) {
      fail(node, fmt::format("'{}' has invalid value '{}'", key, node.Scalar()));
    }
  }

  template <typename T>
  std::vector<T> list(YAML::Node const &node, std::string const &key) const
  {
    if (!node.IsSequence()) {
      fail(node, fmt::format("'{}' must be a list", key));
    }
    std::vector<T> out;
    for (auto const &item : node) {
      out.push_back(as<T>(item, key));
    }
    return out;
  }

  void map(YAML::Node const &node, std::string const &section, std::map<std::string, Setter> const &fields) const
  {
    if (!node.IsMap()) {
      fail(node, fmt::format("section '{}' must be a mapping", section));
    }
    for (auto const &kv : node) {
      auto const key = kv.first.as<std::string>();
      auto it = fields.find(key);
      if (it == fields.end()) {
        fail(kv.first, fmt::format("unknown key '{}' in section '{}'", key, section));
      }
      it->second(kv.second);
    }
  }

  std::string const &source() const { return source_; }

private:
  std::string source_;
};

} // namespace

RunConfig default_config() { return RunConfig{}; }

RunConfig parse_config(std::string const &text, std::string const &source_name)
{
  Reader rd(source_name);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (YAML::ParserException const &e) {
    throw ConfigParseError(source_name, static_cast<std::size_t>(e.mark.line) + 1, e.msg);
  }
  RunConfig cfg = default_config();
  if (root.IsNull()) {
    return cfg;
  }

  std::optional<std::size_t> declared_n;
  YAML::Node n_node;
  auto &e = cfg.env;
  auto &a = cfg.agent;
  auto &t = cfg.training;

  std::map<std::string, Setter> env_fields = {
      {"n", [&](auto const &v) { declared_n = rd.as<std::size_t>(v, "n"); n_node = v; }},
      {"history_length", [&](auto const &v) { e.h = rd.as<std::size_t>(v, "history_length"); }},
      {"r_normal", [&](auto const &v) { e.r_normal = rd.as<double>(v, "r_normal"); }},
      {"r_anomalous", [&](auto const &v) { e.r_anomalous = rd.as<double>(v, "r_anomalous"); }},
      {"cost_weight_lambda", [&](auto const &v) { e.cost_weight_lambda = rd.as<double>(v, "cost_weight_lambda"); }},
      {"sim_discount", [&](auto const &v) { e.sim_discount = rd.as<double>(v, "sim_discount"); }},
      {"leveling_weight_alpha",
       [&](auto const &v) { e.leveling_weight_alpha = rd.as<double>(v, "leveling_weight_alpha"); }},
      {"variance_threshold", [&](auto const &v) { e.variance_threshold = rd.as<double>(v, "variance_threshold"); }},
      {"safety_weight", [&](auto const &v) { e.safety_weight = rd.as<double>(v, "safety_weight"); }},
      {"action_weight", [&](auto const &v) { e.action_weight = rd.as<double>(v, "action_weight"); }},
      {"episode_length", [&](auto const &v) { e.episode_length = rd.as<std::size_t>(v, "episode_length"); }},
      {"lifecycle_horizon", [&](auto const &v) { e.lifecycle_horizon = rd.as<double>(v, "lifecycle_horizon"); }},
      {"repair_success_prob",
       [&](auto const &v) { e.repair_success_prob = rd.as<double>(v, "repair_success_prob"); }},
  };

  std::map<std::string, Setter> agent_fields = {
      {"n_quantiles", [&](auto const &v) { a.net.n_quantiles = rd.as<std::size_t>(v, "n_quantiles"); }},
      {"trunk_widths", [&](auto const &v) { a.net.trunk_widths = rd.list<std::size_t>(v, "trunk_widths"); }},
      {"head_widths", [&](auto const &v) { a.net.head_widths = rd.list<std::size_t>(v, "head_widths"); }},
      {"noisy", [&](auto const &v) { a.net.noisy = rd.as<bool>(v, "noisy"); }},
      {"sigma_init", [&](auto const &v) { a.net.sigma_init = rd.as<double>(v, "sigma_init"); }},
      {"dropout", [&](auto const &v) { a.net.dropout = rd.as<double>(v, "dropout"); }},
      {"learning_rate", [&](auto const &v) { a.adam.lr = rd.as<double>(v, "learning_rate"); }},
      {"adam_beta1", [&](auto const &v) { a.adam.beta1 = rd.as<double>(v, "adam_beta1"); }},
      {"adam_beta2", [&](auto const &v) { a.adam.beta2 = rd.as<double>(v, "adam_beta2"); }},
      {"adam_eps", [&](auto const &v) { a.adam.eps = rd.as<double>(v, "adam_eps"); }},
      {"gamma", [&](auto const &v) { a.gamma = rd.as<double>(v, "gamma"); }},
      {"kappa", [&](auto const &v) { a.kappa = rd.as<double>(v, "kappa"); }},
      {"batch_size", [&](auto const &v) { a.batch_size = rd.as<std::size_t>(v, "batch_size"); }},
      {"buffer_capacity", [&](auto const &v) { a.replay.capacity = rd.as<std::size_t>(v, "buffer_capacity"); }},
      {"warmup", [&](auto const &v) { a.warmup = rd.as<std::size_t>(v, "warmup"); }},
      {"target_sync_interval",
       [&](auto const &v) { a.target_sync_interval = rd.as<std::size_t>(v, "target_sync_interval"); }},
      {"double_dqn", [&](auto const &v) { a.double_dqn = rd.as<bool>(v, "double_dqn"); }},
      {"epsilon", [&](auto const &v) { a.epsilon = rd.as<double>(v, "epsilon"); }},
      {"grad_clip", [&](auto const &v) { a.grad_clip = rd.as<double>(v, "grad_clip"); }},
      {"reward_scale", [&](auto const &v) { a.reward_scale = rd.as<double>(v, "reward_scale"); }},
      {"per_alpha", [&](auto const &v) { a.replay.alpha = rd.as<double>(v, "per_alpha"); }},
      {"per_eps", [&](auto const &v) { a.replay.priority_eps = rd.as<double>(v, "per_eps"); }},
      {"per_beta_start", [&](auto const &v) { a.beta_start = rd.as<double>(v, "per_beta_start"); }},
      {"per_beta_end", [&](auto const &v) { a.beta_end = rd.as<double>(v, "per_beta_end"); }},
  };

  trainer::EarlyStop early = t.early_stop.value_or(trainer::EarlyStop{});
  bool early_enabled = t.early_stop.has_value();
  std::map<std::string, Setter> training_fields = {
      {"episode_budget", [&](auto const &v) { t.episode_budget = rd.as<std::size_t>(v, "episode_budget"); }},
      {"eval_tail", [&](auto const &v) { t.eval_tail = rd.as<std::size_t>(v, "eval_tail"); }},
      {"early_stop", [&](auto const &v) { early_enabled = rd.as<bool>(v, "early_stop"); }},
      {"early_stop_window", [&](auto const &v) { early.window = rd.as<std::size_t>(v, "early_stop_window"); }},
      {"early_stop_min_improvement",
       [&](auto const &v) { early.min_improvement = rd.as<double>(v, "early_stop_min_improvement"); }},
  };

  std::map<std::string, Setter> top = {
      {"seed", [&](auto const &v) { cfg.seed = rd.as<std::uint64_t>(v, "seed"); }},
      {"env", [&](auto const &v) { rd.map(v, "env", env_fields); }},
      {"agent", [&](auto const &v) { rd.map(v, "agent", agent_fields); }},
      {"training", [&](auto const &v) { rd.map(v, "training", training_fields); }},
      {"equipment",
       [&](YAML::Node const &v) {
         if (!v.IsSequence() || v.size() == 0) {
           rd.fail(v, "'equipment' must be a non-empty list");
         }
         cfg.equipment.clear();
         for (auto const &item : v) {
           env::EquipmentSpec s;
           std::map<std::string, Setter> unit_fields = {
               {"id", [&](auto const &x) { s.id = rd.as<std::string>(x, "id"); }},
               {"install_age_years", [&](auto const &x) { s.install_age_years = rd.as<double>(x, "install_age_years"); }},
               {"aging_coeff", [&](auto const &x) { s.aging_coeff = rd.as<double>(x, "aging_coeff"); }},
               {"criticality", [&](auto const &x) { s.criticality = rd.as<double>(x, "criticality"); }},
               {"repair_cost", [&](auto const &x) { s.repair_cost = rd.as<double>(x, "repair_cost"); }},
               {"replace_cost", [&](auto const &x) { s.replace_cost = rd.as<double>(x, "replace_cost"); }},
               {"base_fail_prob", [&](auto const &x) { s.base_fail_prob = rd.as<double>(x, "base_fail_prob"); }},
           };
           rd.map(item, "equipment", unit_fields);
           try {
             s.validate();
           } catch (ConfigError const &err) {
             rd.fail(item, err.what());
           }
           cfg.equipment.push_back(std::move(s));
         }
       }},
  };
  rd.map(root, "<top level>", top);

  cfg.env.n = cfg.equipment.size();
  if (declared_n && *declared_n != cfg.env.n) {
    rd.fail(n_node, fmt::format("env.n = {} but {} equipment entries are listed", *declared_n, cfg.env.n));
  }
  t.early_stop = early_enabled ? std::optional<trainer::EarlyStop>(early) : std::nullopt;

  try {
    cfg.env.validate();
  } catch (ConfigError const &err) {
    rd.fail(root["env"] ? root["env"] : root, err.what());
  }
  try {
    auto probe = cfg.agent;
    probe.net.state_dim = 3 * cfg.env.n + cfg.env.h;
    probe.net.action_count = env::joint_action_count(cfg.env.n);
    probe.validate();
  } catch (ConfigError const &err) {
    rd.fail(root["agent"] ? root["agent"] : root, err.what());
  }
  return cfg;
}

RunConfig load_config(std::string const &path)
{
  std::ifstream in(path);
  if (!in) {
    throw ConfigParseError(path, 0, "cannot open config file");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

namespace {

// Shortest decimal form that reads back to the same double.
std::string real(double v) { return fmt::format("{}", v); }

} // namespace

std::string dump_config(RunConfig const &cfg)
{
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "seed" << YAML::Value << cfg.seed;
  auto const &e = cfg.env;
  out << YAML::Key << "env" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "history_length" << YAML::Value << e.h;
  out << YAML::Key << "r_normal" << YAML::Value << real(e.r_normal);
  out << YAML::Key << "r_anomalous" << YAML::Value << real(e.r_anomalous);
  out << YAML::Key << "cost_weight_lambda" << YAML::Value << real(e.cost_weight_lambda);
  out << YAML::Key << "sim_discount" << YAML::Value << real(e.sim_discount);
  out << YAML::Key << "leveling_weight_alpha" << YAML::Value << real(e.leveling_weight_alpha);
  out << YAML::Key << "variance_threshold" << YAML::Value << real(e.variance_threshold);
  out << YAML::Key << "safety_weight" << YAML::Value << real(e.safety_weight);
  out << YAML::Key << "action_weight" << YAML::Value << real(e.action_weight);
  out << YAML::Key << "episode_length" << YAML::Value << e.episode_length;
  out << YAML::Key << "lifecycle_horizon" << YAML::Value << real(e.lifecycle_horizon);
  out << YAML::Key << "repair_success_prob" << YAML::Value << real(e.repair_success_prob);
  out << YAML::EndMap;
  out << YAML::Key << "equipment" << YAML::Value << YAML::BeginSeq;
  for (auto const &s : cfg.equipment) {
    out << YAML::BeginMap;
    out << YAML::Key << "id" << YAML::Value << s.id;
    out << YAML::Key << "install_age_years" << YAML::Value << real(s.install_age_years);
    out << YAML::Key << "aging_coeff" << YAML::Value << real(s.aging_coeff);
    out << YAML::Key << "criticality" << YAML::Value << real(s.criticality);
    out << YAML::Key << "repair_cost" << YAML::Value << real(s.repair_cost);
    out << YAML::Key << "replace_cost" << YAML::Value << real(s.replace_cost);
    out << YAML::Key << "base_fail_prob" << YAML::Value << real(s.base_fail_prob);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  auto const &a = cfg.agent;
  out << YAML::Key << "agent" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "n_quantiles" << YAML::Value << a.net.n_quantiles;
  out << YAML::Key << "trunk_widths" << YAML::Value << YAML::Flow << a.net.trunk_widths;
  out << YAML::Key << "head_widths" << YAML::Value << YAML::Flow << a.net.head_widths;
  out << YAML::Key << "noisy" << YAML::Value << a.net.noisy;
  out << YAML::Key << "sigma_init" << YAML::Value << real(a.net.sigma_init);
  out << YAML::Key << "dropout" << YAML::Value << real(a.net.dropout);
  out << YAML::Key << "learning_rate" << YAML::Value << real(a.adam.lr);
  out << YAML::Key << "adam_beta1" << YAML::Value << real(a.adam.beta1);
  out << YAML::Key << "adam_beta2" << YAML::Value << real(a.adam.beta2);
  out << YAML::Key << "adam_eps" << YAML::Value << real(a.adam.eps);
  out << YAML::Key << "gamma" << YAML::Value << real(a.gamma);
  out << YAML::Key << "kappa" << YAML::Value << real(a.kappa);
  out << YAML::Key << "batch_size" << YAML::Value << a.batch_size;
  out << YAML::Key << "buffer_capacity" << YAML::Value << a.replay.capacity;
  out << YAML::Key << "warmup" << YAML::Value << a.warmup;
  out << YAML::Key << "target_sync_interval" << YAML::Value << a.target_sync_interval;
  out << YAML::Key << "double_dqn" << YAML::Value << a.double_dqn;
  out << YAML::Key << "epsilon" << YAML::Value << real(a.epsilon);
  out << YAML::Key << "grad_clip" << YAML::Value << real(a.grad_clip);
  out << YAML::Key << "reward_scale" << YAML::Value << real(a.reward_scale);
  out << YAML::Key << "per_alpha" << YAML::Value << real(a.replay.alpha);
  out << YAML::Key << "per_eps" << YAML::Value << real(a.replay.priority_eps);
  out << YAML::Key << "per_beta_start" << YAML::Value << real(a.beta_start);
  out << YAML::Key << "per_beta_end" << YAML::Value << real(a.beta_end);
  out << YAML::EndMap;
  auto const &t = cfg.training;
  out << YAML::Key << "training" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "episode_budget" << YAML::Value << t.episode_budget;
  out << YAML::Key << "eval_tail" << YAML::Value << t.eval_tail;
  out << YAML::Key << "early_stop" << YAML::Value << t.early_stop.has_value();
  auto const early = t.early_stop.value_or(trainer::EarlyStop{});
  out << YAML::Key << "early_stop_window" << YAML::Value << early.window;
  out << YAML::Key << "early_stop_min_improvement" << YAML::Value << real(early.min_improvement);
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

} // namespace cbm::cli
