#include "cbm/trainer/compare.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include <fmt/format.h>

namespace cbm::trainer {

namespace {

// Descending by key; runs without a key (failed, undefined) go last; ties keep run order.
std::vector<std::size_t> rank_by(std::vector<ScenarioOutcome> const &runs,
                                 std::function<std::optional<double>(ScenarioOutcome const &)> const &key)
{
  std::vector<std::size_t> order(runs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::optional<double>> keys;
  for (auto const &r : runs) {
    auto k = r.ok ? key(r) : std::nullopt;
    if (k && !std::isfinite(*k)) {
      k.reset();
    }
    keys.push_back(k);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (keys[a].has_value() != keys[b].has_value()) {
      return keys[a].has_value();
    }
    return keys[a].has_value() && *keys[a] > *keys[b];
  });
  std::vector<std::size_t> rank(runs.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    rank[order[pos]] = pos + 1;
  }
  return rank;
}

std::string fixed(std::optional<double> v, int digits)
{
  if (!v || !std::isfinite(*v)) {
    return "n/a";
  }
  return fmt::format("{:.{}f}", *v, digits);
}

} // namespace

bool ComparisonReport::all_ok() const
{
  return std::all_of(runs.begin(), runs.end(), [](auto const &r) { return r.ok; });
}

ComparisonReport compare_scenarios(std::vector<StrategyConfig> const &strategies, env::EnvConfig const &env,
                                   std::vector<env::EquipmentSpec> const &equipment, agent::AgentConfig const &agent,
                                   std::uint64_t base_seed, bool parallel, std::size_t eval_tail)
{
  if (strategies.empty()) {
    throw ConfigError("compare_scenarios: no strategies given");
  }
  ComparisonReport report;
  report.runs.resize(strategies.size());

  auto run_one = [&](std::size_t i) {
    auto &out = report.runs[i];
    out.strategy = strategies[i];
    out.seed = base_seed + i;
    try {
      TrainingSetup setup{strategies[i], env, equipment, agent, out.seed, eval_tail};
      out.result = run_training(setup);
      out.ok = !out.result.aborted;
      out.error = out.result.error;
    } catch (std::exception const &e) {
      out.ok = false;
      out.error = e.what();
    }
  };

  if (parallel && strategies.size() > 1) {
    std::vector<std::jthread> workers;
    workers.reserve(strategies.size());
    for (std::size_t i = 0; i < strategies.size(); ++i) {
      workers.emplace_back(run_one, i);
    }
  } else {
    for (std::size_t i = 0; i < strategies.size(); ++i) {
      run_one(i);
    }
  }

  report.roi_rank = rank_by(report.runs, [](auto const &r) { return r.result.summary.roi; });
  report.stability_rank =
      rank_by(report.runs, [](auto const &r) { return std::optional<double>(r.result.summary.stability_score); });
  report.reward_rank =
      rank_by(report.runs, [](auto const &r) { return std::optional<double>(r.result.summary.avg_reward_tail); });
  for (std::size_t i = 0; i < report.runs.size(); ++i) {
    if (report.roi_rank[i] == 1 && report.runs[i].ok && report.runs[i].result.summary.roi) {
      report.recommended = report.runs[i].strategy.name;
    }
  }
  return report;
}

std::string ComparisonReport::to_text() const
{
  std::string out;
  out += fmt::format("{:<16} {:>12} {:>10} {:>14} {:>12} {:>8} {:>9} {:>6} {:>6} {:>6}\n", "Strategy", "Avg Reward",
                     "Stability", "Total Cost", "Avg Cost", "ROI", "Episodes", "R(ROI)", "R(Stb)", "R(Rew)");
  for (std::size_t i = 0; i < runs.size(); ++i) {
    auto const &r = runs[i];
    auto const &s = r.result.summary;
    if (!r.ok) {
      out += fmt::format("{:<16} FAILED: {}\n", r.strategy.name, r.error);
      continue;
    }
    out += fmt::format("{:<16} {:>12} {:>9}% {:>14} {:>12} {:>8} {:>9} {:>6} {:>6} {:>6}\n", r.strategy.name,
                       fixed(s.avg_reward_tail, 2), fixed(s.stability_score, 2), fixed(s.total_cost_all, 2),
                       fixed(s.avg_cost_tail, 2), fixed(s.roi, 3), s.episodes_run, roi_rank[i], stability_rank[i],
                       reward_rank[i]);
  }
  out += recommended.empty() ? std::string("Recommendation: none (no strategy produced a defined ROI)\n")
                             : fmt::format("Recommendation: {} (highest ROI)\n", recommended);
  return out;
}

nlohmann::ordered_json ComparisonReport::to_json() const
{
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    auto const &r = runs[i];
    nlohmann::ordered_json row = {{"strategy", r.strategy.name},
                                  {"risk_profile", r.strategy.risk_profile.describe()},
                                  {"seed", r.seed},
                                  {"ok", r.ok},
                                  {"error", r.error},
                                  {"early_stopped", r.result.early_stopped},
                                  {"summary", summary_to_json(r.result.summary)},
                                  {"rank", {{"roi", roi_rank[i]}, {"stability", stability_rank[i]}, {"reward", reward_rank[i]}}}};
    rows.push_back(std::move(row));
  }
  return {{"strategies", rows}, {"recommended", recommended.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(recommended)}};
}

} // namespace cbm::trainer
