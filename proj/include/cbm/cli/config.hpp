#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cbm/agent/agent.hpp"
#include "cbm/env/types.hpp"
#include "cbm/trainer/strategy.hpp"

namespace cbm::cli {

struct TrainingOptions
{
  std::size_t episode_budget = 3000;
  std::size_t eval_tail = 100;
  std::optional<trainer::EarlyStop> early_stop = trainer::EarlyStop{};
};

struct RunConfig
{
  env::EnvConfig env;
  std::vector<env::EquipmentSpec> equipment = env::testbed_equipment();
  agent::AgentConfig agent;
  TrainingOptions training;
  std::uint64_t seed = 0;
};

// "<file>:<line>: <message>" for every problem found while reading a config.
struct ConfigParseError : ConfigError
{
  ConfigParseError(std::string const &file, std::size_t line, std::string const &message)
      : ConfigError(file + ":" + std::to_string(line) + ": " + message), line_number(line)
  {
  }
  std::size_t line_number;
};

// The built-in testbed configuration used when no file is given.
RunConfig default_config();

RunConfig load_config(std::string const &path);
RunConfig parse_config(std::string const &text, std::string const &source_name = "<config>");

// YAML text that parses back to `cfg`.
std::string dump_config(RunConfig const &cfg);

} // namespace cbm::cli
