#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cbm/env/types.hpp"
#include "cbm/trainer/strategy.hpp"

namespace cbm::trainer {

struct EpisodeMetrics
{
  std::size_t episode = 0;
  double total_reward = 0.0;
  double total_cost = 0.0;
  std::size_t anomalous_steps = 0; // unit-steps spent anomalous after the transition
  env::RewardBreakdown reward_components;

  // Action counts, kept in memory and in summaries but not in the metrics file.
  std::size_t anomalous_decisions = 0;   // unit-steps where the agent saw an anomalous unit
  std::size_t anomalous_maintenance = 0; // ... and repaired or replaced it
  std::size_t maintenance_actions = 0;
};

struct RunSummary
{
  double avg_reward_tail = 0.0;
  double reward_std_tail = 0.0;
  double cv_percent = 0.0;
  double stability_score = 0.0;
  double avg_cost_tail = 0.0;
  std::optional<double> roi; // empty when the tail spent nothing
  std::size_t episodes_run = 0;
  std::size_t tail_length = 0;
  double total_cost_all = 0.0;
  double anomalous_maintenance_rate = 0.0; // over all episodes
};

struct DomainError : std::domain_error
{
  using std::domain_error::domain_error;
};

// Piecewise-linear map of the coefficient of variation (percent) into [0,100]:
// [0,10) -> 100..90, [10,20) -> 90..70, [20,50) -> 70..30, [50,inf) -> 30..0.
double stability_score(double cv_percent);

// avg reward per episode / avg maintenance cost per episode; throws DomainError unless cost > 0.
double roi(double avg_reward, double avg_cost);

enum class StopDecision
{
  kContinue,
  kStop
};

// Checked whenever the history length is a multiple of the window; needs two full windows.
StopDecision early_stop_check(std::vector<EpisodeMetrics> const &history, EarlyStop const &cfg);

// Statistics over the final `tail` episodes (all of them if fewer).
RunSummary summarize(std::vector<EpisodeMetrics> const &metrics, std::size_t tail = 100);

// Metrics file: header line
//   episode,total_reward,total_cost,risk,cost,leveling,safety,action,anomalous_steps
// then one row per episode. Reals use the shortest round-trip decimal form.
inline constexpr char const *kMetricsHeader = "episode,total_reward,total_cost,risk,cost,leveling,safety,action,anomalous_steps";

struct MetricsParseError : std::runtime_error
{
  MetricsParseError(std::size_t row_number, std::string const &what)
      : std::runtime_error("metrics row " + std::to_string(row_number) + ": " + what), row(row_number)
  {
  }
  std::size_t row; // 1-based line number in the file
};

void write_metrics_csv(std::ostream &out, std::vector<EpisodeMetrics> const &metrics);
std::vector<EpisodeMetrics> read_metrics_csv(std::istream &in);

nlohmann::ordered_json metrics_to_json(std::vector<EpisodeMetrics> const &metrics);
std::vector<EpisodeMetrics> metrics_from_json(nlohmann::ordered_json const &j);

nlohmann::ordered_json summary_to_json(RunSummary const &s);

std::string format_real(double v);

} // namespace cbm::trainer
