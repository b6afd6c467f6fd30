#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "cbm/cli/commands.hpp"
#include "cbm/cli/config.hpp"
#include "cbm/trainer/metrics.hpp"

using namespace cbm;
using namespace cbm::cli;
namespace fs = std::filesystem;

namespace {

constexpr char const *kToyConfig = R"(seed: 11
env:
  history_length: 3
  episode_length: 12
equipment:
  - id: pump
    install_age_years: 12.0
    aging_coeff: 0.012
    criticality: 1.5
    repair_cost: 40
    replace_cost: 200
    base_fail_prob: 0.02
  - id: fan
    install_age_years: 2.0
    aging_coeff: 0.004
    criticality: 1.0
    repair_cost: 20
    replace_cost: 90
    base_fail_prob: 0.01
agent:
  n_quantiles: 5
  trunk_widths: [16, 16]
  head_widths: [8]
  batch_size: 16
  warmup: 40
  target_sync_interval: 20
  buffer_capacity: 2000
training:
  episode_budget: 10
  eval_tail: 5
  early_stop: false
)";

struct CliResult
{
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> const &args)
{
  std::ostringstream out, err;
  int const code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

// Fresh scratch directory named after the test, under the working directory.
fs::path scratch(std::string const &name)
{
  fs::path const dir = fs::current_path() / "cli_scratch" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(fs::path const &path, std::string const &text)
{
  std::ofstream f(path);
  f << text;
  return path;
}

std::string slurp(fs::path const &path)
{
  std::ifstream f(path, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string with_history(int h)
{
  std::string cfg = kToyConfig;
  auto const pos = cfg.find("history_length: 3");
  cfg.replace(pos, 17, "history_length: " + std::to_string(h));
  return cfg;
}

} // namespace

TEST_CASE("suffix helpers")
{
  CHECK(with_suffix("metrics.csv", 0) == "metrics.csv");
  CHECK(with_suffix("metrics.csv", 1) == "metrics-1.csv");
  CHECK(with_suffix("balanced/summary.json", 2) == (fs::path("balanced") / "summary-2.json").string());
  auto const dir = scratch("suffix");
  CHECK(free_suffix(dir, {"a.txt", "b.txt"}) == 0);
  write_file(dir / "b.txt", "x");
  CHECK(free_suffix(dir, {"a.txt", "b.txt"}) == 1);
  write_file(dir / "a-1.txt", "x");
  CHECK(free_suffix(dir, {"a.txt", "b.txt"}) == 2);
}

TEST_CASE("config: toy file parses with defaults filled in")
{
  auto const cfg = parse_config(kToyConfig, "toy.yaml");
  CHECK(cfg.seed == 11);
  CHECK(cfg.env.n == 2);
  CHECK(cfg.env.h == 3);
  CHECK(cfg.env.episode_length == 12);
  CHECK(cfg.env.r_normal == env::EnvConfig{}.r_normal);
  REQUIRE(cfg.equipment.size() == 2);
  CHECK(cfg.equipment[1].id == "fan");
  CHECK(cfg.equipment[0].replace_cost == 200.0);
  CHECK(cfg.agent.net.n_quantiles == 5);
  CHECK(cfg.agent.net.trunk_widths == std::vector<std::size_t>{16, 16});
  CHECK(cfg.training.episode_budget == 10);
  CHECK_FALSE(cfg.training.early_stop.has_value());
}

TEST_CASE("config: dump then parse reproduces the config")
{
  for (auto const &cfg : {default_config(), parse_config(kToyConfig)}) {
    auto const text = dump_config(cfg);
    auto const back = parse_config(text);
    CHECK(dump_config(back) == text);
    CHECK(back.seed == cfg.seed);
    CHECK(back.env.n == cfg.env.n);
    CHECK(back.env.lifecycle_horizon == cfg.env.lifecycle_horizon);
    CHECK(back.agent.adam.lr == cfg.agent.adam.lr);
    CHECK(back.agent.net.head_widths == cfg.agent.net.head_widths);
    CHECK(back.training.early_stop.has_value() == cfg.training.early_stop.has_value());
    REQUIRE(back.equipment.size() == cfg.equipment.size());
    for (std::size_t i = 0; i < cfg.equipment.size(); ++i) {
      CHECK(back.equipment[i].id == cfg.equipment[i].id);
      CHECK(back.equipment[i].aging_coeff == cfg.equipment[i].aging_coeff);
      CHECK(back.equipment[i].base_fail_prob == cfg.equipment[i].base_fail_prob);
    }
  }
}

TEST_CASE("config: default config is the three-unit testbed")
{
  auto const cfg = default_config();
  REQUIRE(cfg.equipment.size() == 3);
  CHECK(cfg.equipment[0].install_age_years == 19.7);
  CHECK(cfg.equipment[1].install_age_years == 3.0);
  CHECK(cfg.equipment[2].install_age_years == 0.5);
  CHECK(cfg.equipment[0].aging_coeff == 0.018);
  CHECK(cfg.equipment[1].aging_coeff == 0.005);
  CHECK(cfg.equipment[2].aging_coeff == 0.003);
  CHECK(cfg.env.n == 3);
}

TEST_CASE("config: the shipped testbed file equals the built-in default")
{
  auto const shipped = load_config(CBM_SOURCE_DIR "/configs/testbed.yaml");
  CHECK(dump_config(shipped) == dump_config(default_config()));
}

TEST_CASE("config: errors carry file and line")
{
  auto line_of = [](std::string const &text) -> std::size_t {
    try {
      parse_config(text, "bad.yaml");
    } catch (ConfigParseError const &e) {
      CHECK(std::string(e.what()).rfind("bad.yaml:", 0) == 0);
      return e.line_number;
    }
    FAIL("expected a parse error");
    return 0;
  };
  // unknown key on line 3
  CHECK(line_of("seed: 1\nenv:\n  bogus: 4\n") == 3);
  // bad scalar on line 2
  CHECK(line_of("seed: 1\nagent:\n  gamma: fast\n") == 3);
  // wrong top-level key
  CHECK(line_of("seed: 1\nenvironment: {}\n") == 2);
  // YAML syntax error
  CHECK(line_of("seed: 1\nenv: [1, 2\n") >= 2);
  // out-of-range value reported within the section
  CHECK(line_of("seed: 1\nagent:\n  gamma: 1.5\n") >= 2);
  // declared unit count disagreeing with the equipment list
  std::string cfg = kToyConfig;
  cfg.replace(cfg.find("env:\n"), 5, "env:\n  n: 3\n");
  CHECK(line_of(cfg) == 3);
  // equipment entry with an invalid probability
  std::string badp = kToyConfig;
  badp.replace(badp.find("base_fail_prob: 0.02"), 20, "base_fail_prob: 1.50");
  CHECK(line_of(badp) > 3);

  CHECK_THROWS_AS(load_config("/nonexistent/cfg.yaml"), ConfigParseError);
}

TEST_CASE("train: toy budget writes three artifacts")
{
  auto const dir = scratch("train");
  auto const cfg = write_file(dir / "toy.yaml", kToyConfig);
  auto const r = run({"train", "--config", cfg.string(), "--out", (dir / "out").string()});
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "out" / "metrics.csv"));
  CHECK(fs::exists(dir / "out" / "checkpoint.bin"));
  CHECK(fs::exists(dir / "out" / "summary.json"));
  CHECK(fs::exists(dir / "out" / "run.log"));

  std::ifstream mf(dir / "out" / "metrics.csv");
  auto const rows = trainer::read_metrics_csv(mf);
  CHECK(rows.size() == 10);
  auto const summary = nlohmann::json::parse(slurp(dir / "out" / "summary.json"));
  CHECK(summary["strategy"] == "balanced");
  CHECK(summary["seed"] == 11);
  CHECK(summary["aborted"] == false);
  CHECK(summary["summary"]["episodes_run"] == 10);
}

TEST_CASE("train: unknown strategy lists the valid names")
{
  auto const dir = scratch("unknown");
  auto const cfg = write_file(dir / "toy.yaml", kToyConfig);
  auto const r = run({"train", "--config", cfg.string(), "--out", dir.string(), "--strategy", "reckless"});
  CHECK(r.code != 0);
  for (auto const &name : trainer::strategy_names()) {
    CHECK(r.err.find(name) != std::string::npos);
  }
  CHECK_FALSE(fs::exists(dir / "metrics.csv"));
}

TEST_CASE("train: rerun into the same directory adds a suffix")
{
  auto const dir = scratch("rerun");
  auto const cfg = write_file(dir / "toy.yaml", kToyConfig);
  std::vector<std::string> const args = {"train", "--config", cfg.string(), "--out", (dir / "out").string(),
                                         "--episodes", "4"};
  REQUIRE(run(args).code == 0);
  auto const first = slurp(dir / "out" / "metrics.csv");
  auto const first_ckpt = slurp(dir / "out" / "checkpoint.bin");
  REQUIRE(run(args).code == 0);
  CHECK(slurp(dir / "out" / "metrics.csv") == first);
  CHECK(slurp(dir / "out" / "checkpoint.bin") == first_ckpt);
  CHECK(fs::exists(dir / "out" / "metrics-1.csv"));
  CHECK(fs::exists(dir / "out" / "checkpoint-1.bin"));
  CHECK(fs::exists(dir / "out" / "summary-1.json"));
  // Same config and seed: the second run's metrics are byte-identical.
  CHECK(slurp(dir / "out" / "metrics-1.csv") == first);
  CHECK(slurp(dir / "out" / "checkpoint-1.bin") == first_ckpt);
}

TEST_CASE("train: bad config exits 2 with file:line")
{
  auto const dir = scratch("badcfg");
  auto const cfg = write_file(dir / "bad.yaml", "seed: 3\nenv:\n  history_length: -2\n");
  auto const r = run({"train", "--config", cfg.string(), "--out", dir.string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("bad.yaml:3:") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "metrics.csv"));
}

TEST_CASE("train: usage errors")
{
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"fly"}).code == kExitUsage);
  CHECK(run({"train", "--episodes", "many"}).code == kExitUsage);
  CHECK(run({"--help"}).code == kExitOk);
  auto const dir = scratch("usage");
  auto const cfg = write_file(dir / "toy.yaml", kToyConfig);
  CHECK(run({"train", "--config", cfg.string(), "--out", dir.string(), "--strategy", "balanced", "--strategy",
             "safety-first"})
            .code == kExitUsage);
}

TEST_CASE("train: seed override changes the trajectory")
{
  auto const dir = scratch("seed");
  auto const cfg = write_file(dir / "toy.yaml", kToyConfig);
  REQUIRE(run({"train", "--config", cfg.string(), "--out", (dir / "a").string(), "--episodes", "3"}).code == 0);
  REQUIRE(run({"train", "--config", cfg.string(), "--out", (dir / "b").string(), "--episodes", "3", "--seed", "99"})
              .code == 0);
  CHECK(slurp(dir / "a" / "metrics.csv") != slurp(dir / "b" / "metrics.csv"));
  auto const summary = nlohmann::json::parse(slurp(dir / "b" / "summary.json"));
  CHECK(summary["seed"] == 99);
}

TEST_CASE("evaluate: fresh checkpoint, boundary and determinism")
{
  auto const dir = scratch("evaluate");
  auto const cfg = write_file(dir / "toy.yaml", kToyConfig);
  REQUIRE(run({"train", "--config", cfg.string(), "--out", (dir / "t").string(), "--episodes", "0"}).code == 0);
  auto const ckpt = (dir / "t" / "checkpoint.bin").string();

  auto const r = run({"evaluate", "--config", cfg.string(), "--out", (dir / "e").string(), "--checkpoint", ckpt,
                      "--episodes", "6"});
  CHECK(r.code == 0);
  std::ifstream mf(dir / "e" / "eval_metrics.csv");
  auto const rows = trainer::read_metrics_csv(mf);
  CHECK(rows.size() == 6);
  auto const summary = nlohmann::json::parse(slurp(dir / "e" / "eval_summary.json"));
  CHECK(summary["strategy"] == "balanced");
  CHECK(std::isfinite(summary["summary"]["avg_reward_tail"].get<double>()));

  REQUIRE(run({"evaluate", "--config", cfg.string(), "--out", (dir / "e").string(), "--checkpoint", ckpt,
               "--episodes", "6"})
              .code == 0);
  CHECK(slurp(dir / "e" / "eval_metrics-1.csv") == slurp(dir / "e" / "eval_metrics.csv"));

  auto const zero = run({"evaluate", "--config", cfg.string(), "--out", (dir / "z").string(), "--checkpoint", ckpt,
                         "--episodes", "0"});
  CHECK(zero.code == 0);
  CHECK(slurp(dir / "z" / "eval_metrics.csv") == std::string(trainer::kMetricsHeader) + "\n");
}

TEST_CASE("evaluate: header mismatch names the field")
{
  auto const dir = scratch("mismatch");
  auto const cfg = write_file(dir / "toy.yaml", kToyConfig);
  auto const other = write_file(dir / "h6.yaml", with_history(6));
  REQUIRE(run({"train", "--config", cfg.string(), "--out", dir.string(), "--episodes", "0"}).code == 0);
  auto const r = run({"evaluate", "--config", other.string(), "--out", (dir / "e").string(), "--checkpoint",
                      (dir / "checkpoint.bin").string()});
  CHECK(r.code != 0);
  CHECK(r.err.find("history_length") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "e" / "eval_metrics.csv"));

  CHECK(run({"evaluate", "--config", cfg.string(), "--out", dir.string()}).code == kExitUsage);
  CHECK(run({"evaluate", "--config", cfg.string(), "--out", dir.string(), "--checkpoint",
             (dir / "missing.bin").string()})
            .code != 0);
  write_file(dir / "junk.bin", "not a checkpoint");
  CHECK(run({"evaluate", "--config", cfg.string(), "--out", dir.string(), "--checkpoint",
             (dir / "junk.bin").string()})
            .code != 0);
}

TEST_CASE("compare: three strategies, ranked, deterministic")
{
  auto const dir = scratch("compare");
  auto const cfg = write_file(dir / "toy.yaml", kToyConfig);
  std::vector<std::string> const args = {"compare", "--config", cfg.string(), "--out", (dir / "c").string(),
                                         "--episodes", "6"};
  auto const r = run(args);
  REQUIRE(r.code == 0);
  auto const report = nlohmann::json::parse(slurp(dir / "c" / "comparison.json"));
  REQUIRE(report["strategies"].size() == 3);
  std::vector<std::size_t> ranks;
  for (auto const &row : report["strategies"]) {
    ranks.push_back(row["rank"]["roi"].get<std::size_t>());
  }
  std::sort(ranks.begin(), ranks.end());
  CHECK(ranks == std::vector<std::size_t>{1, 2, 3});
  auto const text = slurp(dir / "c" / "comparison.txt");
  CHECK(r.out == text);
  CHECK(text.find("Recommendation") != std::string::npos);
  for (auto const &name : trainer::strategy_names()) {
    CHECK(fs::exists(dir / "c" / name / "metrics.csv"));
    CHECK(fs::exists(dir / "c" / name / "checkpoint.bin"));
    CHECK(fs::exists(dir / "c" / name / "summary.json"));
  }

  REQUIRE(run(args).code == 0);
  CHECK(slurp(dir / "c" / "comparison-1.txt") == text);
  CHECK(slurp(dir / "c" / "comparison-1.json") == slurp(dir / "c" / "comparison.json"));
  for (auto const &name : trainer::strategy_names()) {
    CHECK(slurp(dir / "c" / name / "metrics-1.csv") == slurp(dir / "c" / name / "metrics.csv"));
  }
}

TEST_CASE("compare: a single strategy is trivially ranked")
{
  auto const dir = scratch("compare_one");
  auto const cfg = write_file(dir / "toy.yaml", kToyConfig);
  auto const r =
      run({"compare", "--config", cfg.string(), "--out", dir.string(), "--episodes", "4", "--strategy", "safety-first"});
  REQUIRE(r.code == 0);
  auto const report = nlohmann::json::parse(slurp(dir / "comparison.json"));
  REQUIRE(report["strategies"].size() == 1);
  CHECK(report["strategies"][0]["rank"]["roi"] == 1);
  CHECK(report["strategies"][0]["rank"]["stability"] == 1);
  CHECK(report["strategies"][0]["rank"]["reward"] == 1);

  CHECK(run({"compare", "--config", cfg.string(), "--out", dir.string(), "--strategy", "balanced", "--strategy",
             "balanced"})
            .code == kExitUsage);
}

TEST_CASE("compare: unwritable run directory gives nonzero exit but keeps the report")
{
  auto const dir = scratch("compare_blocked");
  auto const cfg = write_file(dir / "toy.yaml", kToyConfig);
  write_file(dir / "balanced", "a file where the run directory should be");
  auto const r = run({"compare", "--config", cfg.string(), "--out", dir.string(), "--episodes", "3"});
  CHECK(r.code == kExitFailure);
  CHECK(fs::exists(dir / "comparison.txt"));
  CHECK(fs::exists(dir / "comparison.json"));
  CHECK(fs::exists(dir / "safety-first" / "metrics.csv"));
  CHECK(fs::exists(dir / "cost-efficient" / "metrics.csv"));
  CHECK(r.err.find("balanced") != std::string::npos);
}

TEST_CASE("export: csv -> json -> csv is lossless")
{
  auto const dir = scratch("export");
  auto const cfg = write_file(dir / "toy.yaml", kToyConfig);
  REQUIRE(run({"train", "--config", cfg.string(), "--out", (dir / "t").string(), "--episodes", "5"}).code == 0);
  auto const csv = dir / "t" / "metrics.csv";
  REQUIRE(run({"export", "--metrics", csv.string(), "--format", "json", "--out", (dir / "j").string()}).code == 0);
  auto const json = dir / "j" / "metrics.json";
  REQUIRE(fs::exists(json));
  auto const doc = nlohmann::json::parse(slurp(json));
  auto const &parsed = doc["episodes"];
  REQUIRE(parsed.is_array());
  REQUIRE(parsed.size() == 5);
  for (auto const *key : {"episode", "total_reward", "total_cost", "risk", "cost", "leveling", "safety", "action",
                          "anomalous_steps"}) {
    CHECK(parsed[0].contains(key));
  }
  // positional form of the input path
  REQUIRE(run({"export", json.string(), "--format", "csv", "--out", (dir / "c").string()}).code == 0);
  CHECK(slurp(dir / "c" / "metrics.csv") == slurp(csv));
}

TEST_CASE("export: header-only file gives an empty export")
{
  auto const dir = scratch("export_empty");
  auto const src = write_file(dir / "empty.csv", std::string(trainer::kMetricsHeader) + "\n");
  REQUIRE(run({"export", "--metrics", src.string(), "--format", "json", "--out", dir.string()}).code == 0);
  auto const doc = nlohmann::json::parse(slurp(dir / "empty.json"));
  auto const &parsed = doc["episodes"];
  CHECK(parsed.is_array());
  CHECK(parsed.empty());
  REQUIRE(run({"export", "--metrics", (dir / "empty.json").string(), "--out", (dir / "back").string()}).code == 0);
  CHECK(slurp(dir / "back" / "empty.csv") == slurp(src));
}

TEST_CASE("export: unknown format and malformed rows")
{
  auto const dir = scratch("export_bad");
  auto const src = write_file(dir / "m.csv", std::string(trainer::kMetricsHeader) + "\n");
  auto const r = run({"export", "--metrics", src.string(), "--format", "xml", "--out", dir.string()});
  CHECK(r.code != 0);
  CHECK(r.err.find("csv") != std::string::npos);
  CHECK(r.err.find("json") != std::string::npos);

  auto const bad = write_file(dir / "bad.csv", std::string(trainer::kMetricsHeader) +
                                                   "\n0,1,2,0,0,0,0,0,0\n1,1,oops,0,0,0,0,0,0\n");
  auto const b = run({"export", "--metrics", bad.string(), "--format", "json", "--out", dir.string()});
  CHECK(b.code != 0);
  CHECK(b.err.find("row 3") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "bad.json"));

  CHECK(run({"export", "--format", "json", "--out", dir.string()}).code == kExitUsage);
  CHECK(run({"export", "--metrics", (dir / "absent.csv").string(), "--out", dir.string()}).code != 0);
}

TEST_CASE("the installed binary runs end to end")
{
  auto const dir = scratch("binary");
  auto const cfg = write_file(dir / "toy.yaml", kToyConfig);
  std::string const cmd = std::string("\"") + CBM_CLI_BINARY + "\" train --config \"" + cfg.string() +
                          "\" --episodes 2 --out \"" + (dir / "out").string() + "\" > \"" +
                          (dir / "stdout.txt").string() + "\" 2>&1";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(dir / "out" / "metrics.csv"));
  CHECK(slurp(dir / "stdout.txt").find("balanced") != std::string::npos);

  std::string const bad = std::string("\"") + CBM_CLI_BINARY + "\" train --bogus > /dev/null 2>&1";
  int const status = std::system(bad.c_str());
  CHECK(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == kExitUsage);
}
