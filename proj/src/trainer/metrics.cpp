#include "cbm/trainer/metrics.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

namespace cbm::trainer {

double stability_score(double cv)
{
  if (!(cv >= 0.0)) {
    throw DomainError(fmt::format("stability_score: CV must be >= 0, got {}", cv));
  }
  if (cv < 10.0) {
    return 100.0 - cv;
  }
  if (cv < 20.0) {
    return 90.0 - 2.0 * (cv - 10.0);
  }
  if (cv < 50.0) {
    return 70.0 - (4.0 / 3.0) * (cv - 20.0);
  }
  if (std::isinf(cv)) {
    return 0.0;
  }
  return std::max(0.0, 30.0 - 0.6 * (cv - 50.0));
}

double roi(double avg_reward, double avg_cost)
{
  if (!(avg_cost > 0.0)) {
    throw DomainError(fmt::format("ROI undefined for average cost {}", avg_cost));
  }
  return avg_reward / avg_cost;
}

StopDecision early_stop_check(std::vector<EpisodeMetrics> const &history, EarlyStop const &cfg)
{
  std::size_t const w = cfg.window;
  if (w == 0 || history.size() < 2 * w || history.size() % w != 0) {
    return StopDecision::kContinue;
  }
  double last = 0.0;
  double prev = 0.0;
  std::size_t const end = history.size();
  for (std::size_t i = end - w; i < end; ++i) {
    last += history[i].total_reward;
  }
  for (std::size_t i = end - 2 * w; i < end - w; ++i) {
    prev += history[i].total_reward;
  }
  last /= static_cast<double>(w);
  prev /= static_cast<double>(w);
  double const improvement = (last - prev) / std::max(std::abs(prev), 1e-12);
  return improvement < cfg.min_improvement ? StopDecision::kStop : StopDecision::kContinue;
}

RunSummary summarize(std::vector<EpisodeMetrics> const &metrics, std::size_t tail)
{
  RunSummary s;
  s.episodes_run = metrics.size();
  std::size_t decisions = 0;
  std::size_t maintained = 0;
  for (auto const &m : metrics) {
    s.total_cost_all += m.total_cost;
    decisions += m.anomalous_decisions;
    maintained += m.anomalous_maintenance;
  }
  s.anomalous_maintenance_rate = decisions > 0 ? static_cast<double>(maintained) / static_cast<double>(decisions) : 0.0;
  s.tail_length = std::min(tail, metrics.size());
  if (s.tail_length == 0) {
    return s;
  }
  std::size_t const begin = metrics.size() - s.tail_length;
  double const count = static_cast<double>(s.tail_length);
  for (std::size_t i = begin; i < metrics.size(); ++i) {
    s.avg_reward_tail += metrics[i].total_reward;
    s.avg_cost_tail += metrics[i].total_cost;
  }
  s.avg_reward_tail /= count;
  s.avg_cost_tail /= count;
  double ss = 0.0;
  for (std::size_t i = begin; i < metrics.size(); ++i) {
    double const d = metrics[i].total_reward - s.avg_reward_tail;
    ss += d * d;
  }
  s.reward_std_tail = std::sqrt(ss / count);
  if (s.avg_reward_tail != 0.0) {
    s.cv_percent = s.reward_std_tail / std::abs(s.avg_reward_tail) * 100.0;
  } else {
    s.cv_percent = s.reward_std_tail == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  s.stability_score = stability_score(s.cv_percent);
  if (s.avg_cost_tail > 0.0) {
    s.roi = roi(s.avg_reward_tail, s.avg_cost_tail);
  }
  return s;
}

std::string format_real(double v) { return fmt::format("{}", v); }

void write_metrics_csv(std::ostream &out, std::vector<EpisodeMetrics> const &metrics)
{
  out << kMetricsHeader << '\n';
  for (auto const &m : metrics) {
    auto const &c = m.reward_components;
    out << fmt::format("{},{},{},{},{},{},{},{},{}\n", m.episode, m.total_reward, m.total_cost, c.risk, c.cost,
                       c.leveling, c.safety, c.action, m.anomalous_steps);
  }
}

namespace {

template <typename T>
T parse_field(std::string_view text, std::size_t row, char const *column)
{
  T value{};
  auto const *first = text.data();
  auto const *last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw MetricsParseError(row, fmt::format("column '{}' has invalid value '{}'", column, text));
  }
  return value;
}

} // namespace

std::vector<EpisodeMetrics> read_metrics_csv(std::istream &in)
{
  std::string line;
  if (!std::getline(in, line)) {
    throw MetricsParseError(1, "missing header");
  }
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  if (line != kMetricsHeader) {
    throw MetricsParseError(1, fmt::format("header '{}' does not match '{}'", line, kMetricsHeader));
  }
  std::vector<EpisodeMetrics> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      auto const comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) {
        break;
      }
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 9) {
      throw MetricsParseError(row, fmt::format("expected 9 columns, found {}", fields.size()));
    }
    EpisodeMetrics m;
    m.episode = parse_field<std::size_t>(fields[0], row, "episode");
    m.total_reward = parse_field<double>(fields[1], row, "total_reward");
    m.total_cost = parse_field<double>(fields[2], row, "total_cost");
    m.reward_components.risk = parse_field<double>(fields[3], row, "risk");
    m.reward_components.cost = parse_field<double>(fields[4], row, "cost");
    m.reward_components.leveling = parse_field<double>(fields[5], row, "leveling");
    m.reward_components.safety = parse_field<double>(fields[6], row, "safety");
    m.reward_components.action = parse_field<double>(fields[7], row, "action");
    m.anomalous_steps = parse_field<std::size_t>(fields[8], row, "anomalous_steps");
    m.reward_components.total = m.total_reward;
    out.push_back(m);
  }
  return out;
}

nlohmann::ordered_json metrics_to_json(std::vector<EpisodeMetrics> const &metrics)
{
  auto rows = nlohmann::ordered_json::array();
  for (auto const &m : metrics) {
    auto const &c = m.reward_components;
    rows.push_back({{"episode", m.episode},
                    {"total_reward", m.total_reward},
                    {"total_cost", m.total_cost},
                    {"risk", c.risk},
                    {"cost", c.cost},
                    {"leveling", c.leveling},
                    {"safety", c.safety},
                    {"action", c.action},
                    {"anomalous_steps", m.anomalous_steps}});
  }
  return {{"columns", nlohmann::ordered_json::array({"episode", "total_reward", "total_cost", "risk", "cost",
                                                     "leveling", "safety", "action", "anomalous_steps"})},
          {"episodes", rows}};
}

std::vector<EpisodeMetrics> metrics_from_json(nlohmann::ordered_json const &j)
{
  std::vector<EpisodeMetrics> out;
  auto const &rows = j.at("episodes");
  std::size_t row = 0;
  for (auto const &r : rows) {
    ++row;
    try {
      EpisodeMetrics m;
      m.episode = r.at("episode").get<std::size_t>();
      m.total_reward = r.at("total_reward").get<double>();
      m.total_cost = r.at("total_cost").get<double>();
      m.reward_components.risk = r.at("risk").get<double>();
      m.reward_components.cost = r.at("cost").get<double>();
      m.reward_components.leveling = r.at("leveling").get<double>();
      m.reward_components.safety = r.at("safety").get<double>();
      m.reward_components.action = r.at("action").get<double>();
      m.anomalous_steps = r.at("anomalous_steps").get<std::size_t>();
      m.reward_components.total = m.total_reward;
      out.push_back(m);
    } catch (nlohmann::json::exception const &e) {
      throw MetricsParseError(row, e.what());
    }
  }
  return out;
}

namespace {

nlohmann::ordered_json finite_or_null(double v)
{
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

} // namespace

nlohmann::ordered_json summary_to_json(RunSummary const &s)
{
  return {{"avg_reward_tail", finite_or_null(s.avg_reward_tail)},
          {"reward_std_tail", finite_or_null(s.reward_std_tail)},
          {"cv_percent", finite_or_null(s.cv_percent)},
          {"stability_score", finite_or_null(s.stability_score)},
          {"avg_cost_tail", finite_or_null(s.avg_cost_tail)},
          {"roi", s.roi ? finite_or_null(*s.roi) : nlohmann::ordered_json(nullptr)},
          {"episodes_run", s.episodes_run},
          {"tail_length", s.tail_length},
          {"total_cost_all", finite_or_null(s.total_cost_all)},
          {"anomalous_maintenance_rate", finite_or_null(s.anomalous_maintenance_rate)}};
}

} // namespace cbm::trainer
