#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cbm::cli {

enum class Command
{
  kTrain,
  kEvaluate,
  kCompare,
  kExport
};

struct RunManifest
{
  Command command = Command::kTrain;
  std::string config_path; // empty: built-in testbed config
  std::optional<std::uint64_t> seed;
  std::filesystem::path output_dir = "runs";
  std::vector<std::string> strategy_names;
  std::string checkpoint_path;
  std::optional<std::size_t> episodes;
  std::string format = "csv";
  std::string metrics_path;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Smallest k such that none of `names` exists in `dir` once suffix k is applied
// ("metrics.csv" -> "metrics-1.csv"); k = 0 means no suffix.
std::size_t free_suffix(std::filesystem::path const &dir, std::vector<std::string> const &names);
std::string with_suffix(std::string const &name, std::size_t k);

int cmd_train(RunManifest const &m, std::ostream &out, std::ostream &err);
int cmd_evaluate(RunManifest const &m, std::ostream &out, std::ostream &err);
int cmd_compare(RunManifest const &m, std::ostream &out, std::ostream &err);
int cmd_export(RunManifest const &m, std::ostream &out, std::ostream &err);

// Parses the command line and dispatches. Returns the process exit status.
int run_cli(std::vector<std::string> const &args, std::ostream &out, std::ostream &err);

} // namespace cbm::cli
