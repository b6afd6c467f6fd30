#pragma once

#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cbm/errors.hpp"

namespace cbm::env {

using StateVector = Eigen::VectorXd;

struct EpisodeError : std::logic_error
{
  using std::logic_error::logic_error;
};

struct DomainError : std::domain_error
{
  using std::domain_error::domain_error;
};

enum class Condition : std::uint8_t
{
  kNormal = 0,
  kAnomalous = 1
};

enum class Action : std::uint8_t
{
  kNothing = 0,
  kRepair = 1,
  kReplace = 2
};

inline constexpr int kActionsPerUnit = 3;

struct EquipmentSpec
{
  std::string id;
  double install_age_years = 0.0;
  double aging_coeff = 0.0;
  double criticality = 1.0;
  double repair_cost = 0.0;
  double replace_cost = 0.0;
  double base_fail_prob = 0.0; // per monthly step

  double action_cost(Action a) const
  {
    switch (a) {
    case Action::kRepair:
      return repair_cost;
    case Action::kReplace:
      return replace_cost;
    case Action::kNothing:
      break;
    }
    return 0.0;
  }

  void validate() const;
};

struct EquipmentState
{
  Condition condition = Condition::kNormal;
  double temp_norm = 0.0;
  double age_norm = 0.0;
  double age_years = 0.0;
};

// Fixed-length window of the most recent monthly maintenance spend, oldest first.
class CostHistory
{
public:
  explicit CostHistory(std::size_t length = 0) : window_(length, 0.0) {}

  std::size_t length() const { return window_.size(); }
  void push(double spend);
  void clear();
  std::deque<double> const &values() const { return window_; }
  double variance() const; // population variance, 0 for an empty window

private:
  std::deque<double> window_;
};

class JointAction
{
public:
  JointAction() = default;
  explicit JointAction(std::vector<Action> per_unit) : per_unit_(std::move(per_unit)) {}

  // Unit 0 is the least significant base-3 digit.
  static JointAction decode(std::size_t index, std::size_t n_units);
  std::size_t encode() const;

  std::size_t size() const { return per_unit_.size(); }
  Action operator[](std::size_t i) const { return per_unit_[i]; }
  std::vector<Action> const &per_unit() const { return per_unit_; }
  std::size_t maintenance_count() const;

private:
  std::vector<Action> per_unit_;
};

std::size_t joint_action_count(std::size_t n_units);

struct RewardBreakdown
{
  double risk = 0.0;
  double cost = 0.0;
  double leveling = 0.0;
  double safety = 0.0;
  double action = 0.0;
  double total = 0.0;

  static RewardBreakdown from_parts(double risk, double cost, double leveling, double safety, double action)
  {
    return {risk, cost, leveling, safety, action, risk + cost + leveling + safety + action};
  }

  RewardBreakdown &operator+=(RewardBreakdown const &o)
  {
    risk += o.risk;
    cost += o.cost;
    leveling += o.leveling;
    safety += o.safety;
    action += o.action;
    total += o.total;
    return *this;
  }
};

struct EnvConfig
{
  std::size_t n = 3;
  std::size_t h = 12;
  double r_normal = 20.0;
  double r_anomalous = -10.0;
  double cost_weight_lambda = 0.1;
  double sim_discount = 0.1;
  double leveling_weight_alpha = 1.0;
  double variance_threshold = 15.0;
  double safety_weight = 10.0;
  double action_weight = 5.0;
  std::size_t episode_length = 60;
  double lifecycle_horizon = 25.0;
  double repair_success_prob = 0.9;
  std::uint64_t seed = 0;

  void validate() const;
};

// The three-pump testbed: CP-1, CDP-0, CP-2.
std::vector<EquipmentSpec> testbed_equipment();

} // namespace cbm::env
