#include "cbm/cli/commands.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cbm/agent/checkpoint.hpp"
#include "cbm/cli/config.hpp"
#include "cbm/trainer/compare.hpp"
#include "cbm/trainer/training.hpp"

namespace cbm::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : ConfigError
{
  using ConfigError::ConfigError;
};

// Writes to a scratch file first so a crash never leaves a half-written artifact under the final name.
void write_artifact(fs::path const &path, std::function<void(std::ostream &)> const &body, bool binary = false)
{
  fs::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream f(tmp, binary ? std::ios::binary | std::ios::out : std::ios::out);
    if (!f) {
      throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    }
    body(f);
    f.flush();
    if (!f) {
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

void append_log(fs::path const &dir, std::string const &line)
{
  auto const now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);
  std::ofstream log(dir / "run.log", std::ios::app);
  log << stamp << ' ' << line << '\n';
}

RunConfig load_run_config(RunManifest const &m)
{
  RunConfig cfg = m.config_path.empty() ? default_config() : load_config(m.config_path);
  if (m.seed) {
    cfg.seed = *m.seed;
  }
  return cfg;
}

trainer::StrategyConfig strategy_for(std::string const &name, RunConfig const &cfg, RunManifest const &m)
{
  return trainer::make_strategy(name, m.episodes.value_or(cfg.training.episode_budget), cfg.training.early_stop);
}

std::vector<std::string> run_artifact_names(std::string const &prefix)
{
  return {prefix + "metrics.csv", prefix + "checkpoint.bin", prefix + "summary.json"};
}

nlohmann::ordered_json run_summary_json(trainer::StrategyConfig const &s, std::uint64_t seed,
                                        trainer::TrainingResult const &r)
{
  return {{"strategy", s.name},
          {"risk_profile", s.risk_profile.describe()},
          {"seed", seed},
          {"aborted", r.aborted},
          {"early_stopped", r.early_stopped},
          {"error", r.error},
          {"summary", trainer::summary_to_json(r.summary)}};
}

// metrics, checkpoint (only if the run finished) and summary for one training run.
std::vector<fs::path> write_run(fs::path const &dir, std::size_t k, std::string const &prefix,
                                trainer::StrategyConfig const &strategy, RunConfig const &cfg, std::uint64_t seed,
                                trainer::TrainingResult const &r)
{
  auto const names = run_artifact_names(prefix);
  std::vector<fs::path> written;
  auto const metrics = dir / with_suffix(names[0], k);
  write_artifact(metrics, [&](std::ostream &o) { trainer::write_metrics_csv(o, r.metrics); });
  written.push_back(metrics);
  if (!r.aborted && r.agent) {
    auto const ckpt = dir / with_suffix(names[1], k);
    auto const header =
        agent::CheckpointHeader::describe(r.agent->online().config(), cfg.env.n, cfg.env.h, strategy.name);
    write_artifact(ckpt, [&](std::ostream &o) { agent::save_checkpoint(o, header, r.agent->online()); }, true);
    written.push_back(ckpt);
  }
  auto const summary = dir / with_suffix(names[2], k);
  write_artifact(summary, [&](std::ostream &o) { o << run_summary_json(strategy, seed, r).dump(2) << '\n'; });
  written.push_back(summary);
  return written;
}

std::string join_paths(std::vector<fs::path> const &paths)
{
  std::string out;
  for (auto const &p : paths) {
    out += (out.empty() ? "" : " ") + p.string();
  }
  return out;
}

void check_format(std::string const &format)
{
  if (format != "csv" && format != "json") {
    throw UsageError(fmt::format("unknown format '{}'; supported formats: csv, json", format));
  }
}

} // namespace

std::string with_suffix(std::string const &name, std::size_t k)
{
  if (k == 0) {
    return name;
  }
  fs::path const p(name);
  fs::path out = p.parent_path() / (p.stem().string() + "-" + std::to_string(k) + p.extension().string());
  return out.string();
}

std::size_t free_suffix(fs::path const &dir, std::vector<std::string> const &names)
{
  for (std::size_t k = 0;; ++k) {
    bool clash = false;
    for (auto const &n : names) {
      if (fs::exists(dir / with_suffix(n, k))) {
        clash = true;
        break;
      }
    }
    if (!clash) {
      return k;
    }
  }
}

int cmd_train(RunManifest const &m, std::ostream &out, std::ostream &err)
{
  RunConfig const cfg = load_run_config(m);
  if (m.strategy_names.size() > 1) {
    throw UsageError("train takes a single --strategy; use compare for several");
  }
  std::string const name = m.strategy_names.empty() ? std::string(trainer::kBalanced) : m.strategy_names.front();
  auto const strategy = strategy_for(name, cfg, m);

  fs::create_directories(m.output_dir);
  std::size_t const k = free_suffix(m.output_dir, run_artifact_names(""));

  trainer::TrainingSetup setup{strategy, cfg.env, cfg.equipment, cfg.agent, cfg.seed, cfg.training.eval_tail};
  auto const result = trainer::run_training(setup);
  auto const written = write_run(m.output_dir, k, "", strategy, cfg, cfg.seed, result);
  append_log(m.output_dir, fmt::format("train strategy={} seed={} episodes={} aborted={} artifacts: {}", name, cfg.seed,
                                       result.metrics.size(), result.aborted, join_paths(written)));

  auto const &s = result.summary;
  out << fmt::format("strategy {}: {} episodes, avg reward {}, stability {}, roi {}\n", name, s.episodes_run,
                     fmt::format("{:.2f}", s.avg_reward_tail), fmt::format("{:.2f}", s.stability_score),
                     s.roi ? fmt::format("{:.3f}", *s.roi) : std::string("n/a"));
  if (result.aborted) {
    err << "training aborted: " << result.error << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_evaluate(RunManifest const &m, std::ostream &out, std::ostream &)
{
  RunConfig const cfg = load_run_config(m);
  if (m.checkpoint_path.empty()) {
    throw UsageError("evaluate needs --checkpoint PATH");
  }
  if (m.strategy_names.size() > 1) {
    throw UsageError("evaluate takes a single --strategy");
  }
  std::ifstream in(m.checkpoint_path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open checkpoint " + m.checkpoint_path);
  }
  auto const ckpt = agent::read_checkpoint(in);

  std::string name = std::string(trainer::kBalanced);
  if (!m.strategy_names.empty()) {
    name = m.strategy_names.front();
  } else if (!ckpt.header.strategy.empty()) {
    name = ckpt.header.strategy;
  }
  auto const strategy = strategy_for(name, cfg, m);
  auto const env_cfg = strategy.apply(cfg.env);
  auto const agent_cfg = trainer::configure_agent(cfg.agent, env_cfg);
  agent::check_compatible(ckpt.header, agent::CheckpointHeader::describe(agent_cfg.net, cfg.env.n, cfg.env.h, name));

  agent::QrDqnAgent learner(agent_cfg, trainer::derive_seed(cfg.seed, 1));
  agent::load_parameters(learner.online(), ckpt.parameters);
  learner.sync_target();

  std::size_t const episodes = m.episodes.value_or(cfg.training.eval_tail);
  auto const metrics =
      trainer::evaluate_policy(learner, strategy.risk_profile, env_cfg, cfg.equipment, episodes, cfg.seed);
  auto const summary = trainer::summarize(metrics, metrics.size());

  fs::create_directories(m.output_dir);
  std::vector<std::string> const names = {"eval_metrics.csv", "eval_summary.json"};
  std::size_t const k = free_suffix(m.output_dir, names);
  fs::path const metrics_path = m.output_dir / with_suffix(names[0], k);
  fs::path const summary_path = m.output_dir / with_suffix(names[1], k);
  write_artifact(metrics_path, [&](std::ostream &o) { trainer::write_metrics_csv(o, metrics); });
  nlohmann::ordered_json j = {{"strategy", name},
                              {"risk_profile", strategy.risk_profile.describe()},
                              {"seed", cfg.seed},
                              {"episodes", metrics.size()},
                              {"summary", trainer::summary_to_json(summary)}};
  write_artifact(summary_path, [&](std::ostream &o) { o << j.dump(2) << '\n'; });
  append_log(m.output_dir, fmt::format("evaluate checkpoint={} strategy={} seed={} episodes={} artifacts: {} {}",
                                       m.checkpoint_path, name, cfg.seed, episodes, metrics_path.string(),
                                       summary_path.string()));
  out << fmt::format("evaluated {} episodes, avg reward {:.2f}\n", metrics.size(), summary.avg_reward_tail);
  return kExitOk;
}

int cmd_compare(RunManifest const &m, std::ostream &out, std::ostream &err)
{
  RunConfig const cfg = load_run_config(m);
  std::vector<std::string> names = m.strategy_names.empty() ? trainer::strategy_names() : m.strategy_names;
  std::set<std::string> seen;
  std::vector<trainer::StrategyConfig> strategies;
  for (auto const &n : names) {
    if (!seen.insert(n).second) {
      throw UsageError("strategy '" + n + "' given twice");
    }
    strategies.push_back(strategy_for(n, cfg, m));
  }

  fs::create_directories(m.output_dir);
  std::vector<std::string> all = {"comparison.txt", "comparison.json"};
  for (auto const &n : names) {
    for (auto const &a : run_artifact_names(n + "/")) {
      all.push_back(a);
    }
  }
  std::size_t const k = free_suffix(m.output_dir, all);

  auto const report = trainer::compare_scenarios(strategies, cfg.env, cfg.equipment, cfg.agent, cfg.seed, true,
                                                 cfg.training.eval_tail);
  std::vector<fs::path> written;
  bool artifacts_ok = true;
  for (auto const &run : report.runs) {
    try {
      fs::create_directories(m.output_dir / run.strategy.name);
      auto w = write_run(m.output_dir, k, run.strategy.name + "/", run.strategy, cfg, run.seed, run.result);
      written.insert(written.end(), w.begin(), w.end());
    } catch (std::exception const &e) {
      artifacts_ok = false;
      err << "could not write artifacts for '" << run.strategy.name << "': " << e.what() << "\n";
    }
  }
  std::string const text = report.to_text();
  fs::path const txt = m.output_dir / with_suffix("comparison.txt", k);
  fs::path const js = m.output_dir / with_suffix("comparison.json", k);
  write_artifact(txt, [&](std::ostream &o) { o << text; });
  write_artifact(js, [&](std::ostream &o) { o << report.to_json().dump(2) << '\n'; });
  written.push_back(txt);
  written.push_back(js);
  append_log(m.output_dir, fmt::format("compare seed={} strategies={} ok={} artifacts: {}", cfg.seed,
                                       fmt::join(names, ","), report.all_ok(), join_paths(written)));
  out << text;
  if (!report.all_ok()) {
    for (auto const &run : report.runs) {
      if (!run.ok) {
        err << "run '" << run.strategy.name << "' failed: " << run.error << "\n";
      }
    }
    return kExitFailure;
  }
  return artifacts_ok ? kExitOk : kExitFailure;
}

int cmd_export(RunManifest const &m, std::ostream &out, std::ostream &)
{
  check_format(m.format);
  if (m.metrics_path.empty()) {
    throw UsageError("export needs --metrics PATH");
  }
  fs::path const src(m.metrics_path);
  std::ifstream in(src);
  if (!in) {
    throw std::runtime_error("cannot open metrics file " + src.string());
  }
  std::vector<trainer::EpisodeMetrics> metrics;
  if (src.extension() == ".json") {
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(in);
    } catch (nlohmann::json::exception const &e) {
      throw std::runtime_error("malformed metrics file " + src.string() + ": " + e.what());
    }
    metrics = trainer::metrics_from_json(j);
  } else {
    metrics = trainer::read_metrics_csv(in);
  }

  fs::create_directories(m.output_dir);
  std::string const name = src.stem().string() + "." + m.format;
  std::size_t const k = free_suffix(m.output_dir, {name});
  fs::path const dst = m.output_dir / with_suffix(name, k);
  write_artifact(dst, [&](std::ostream &o) {
    if (m.format == "json") {
      o << trainer::metrics_to_json(metrics).dump(2) << '\n';
    } else {
      trainer::write_metrics_csv(o, metrics);
    }
  });
  append_log(m.output_dir, fmt::format("export from={} format={} rows={} artifacts: {}", src.string(), m.format,
                                       metrics.size(), dst.string()));
  out << fmt::format("wrote {} rows to {}\n", metrics.size(), dst.string());
  return kExitOk;
}

int run_cli(std::vector<std::string> const &args, std::ostream &out, std::ostream &err)
{
  CLI::App app{"Condition-based maintenance scheduling with a distributional Q-learning agent"};
  app.require_subcommand(1);

  RunManifest m;
  std::uint64_t seed = 0;
  std::size_t episodes = 0;
  std::string output_dir = m.output_dir.string();

  auto add_common = [&](CLI::App *sub) {
    sub->add_option("--config", m.config_path, "YAML config file (default: built-in testbed)");
    sub->add_option("--seed", seed, "Run seed (overrides the config)");
    sub->add_option("--out", output_dir, "Output directory")->envname("CBMQ_OUT")->capture_default_str();
    sub->add_option("--strategy", m.strategy_names, "safety-first | balanced | cost-efficient (repeatable)");
    sub->add_option("--episodes", episodes, "Episode budget (train, compare) or count (evaluate)");
  };
  auto *train = app.add_subcommand("train", "Train one strategy and write metrics, checkpoint and summary");
  auto *evaluate = app.add_subcommand("evaluate", "Greedy rollouts from a checkpoint, no learning");
  auto *compare = app.add_subcommand("compare", "Train several strategies and rank them");
  auto *exporter = app.add_subcommand("export", "Convert a metrics file between csv and json");
  for (auto *sub : {train, evaluate, compare, exporter}) {
    add_common(sub);
  }
  evaluate->add_option("--checkpoint", m.checkpoint_path, "Checkpoint written by train");
  exporter->add_option("metrics,--metrics", m.metrics_path, "Metrics file to convert (.csv or .json)");
  exporter->add_option("--format", m.format, "csv | json")->capture_default_str();

  std::vector<char const *> argv;
  argv.push_back("cbmq");
  for (auto const &a : args) {
    argv.push_back(a.c_str());
  }
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (CLI::ParseError const &e) {
    int const code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CLI::App *chosen = app.get_subcommands().front();
  if (chosen->count("--seed") > 0) {
    m.seed = seed;
  }
  if (chosen->count("--episodes") > 0) {
    m.episodes = episodes;
  }
  m.output_dir = output_dir;

  try {
    if (chosen == train) {
      m.command = Command::kTrain;
      return cmd_train(m, out, err);
    }
    if (chosen == evaluate) {
      m.command = Command::kEvaluate;
      return cmd_evaluate(m, out, err);
    }
    if (chosen == compare) {
      m.command = Command::kCompare;
      return cmd_compare(m, out, err);
    }
    m.command = Command::kExport;
    return cmd_export(m, out, err);
  } catch (ConfigError const &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (std::exception const &e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

} // namespace cbm::cli
