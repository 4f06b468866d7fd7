// Command-line front end. Exit codes: 0 success, 1 usage error,
// 2 runtime failure, 3 consistency violation.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mrgr/harness/config.hpp"
#include "mrgr/harness/plot.hpp"
#include "mrgr/harness/run.hpp"
#include "mrgr/regret/regret.hpp"

namespace {

constexpr int kUsage = 1;
constexpr int kRuntime = 2;
constexpr int kViolation = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace mrgr;
  CLI::App app{"Team regret minimization with value decomposition"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "train a method on an environment");
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  std::optional<std::size_t> iterations, stop_after;
  bool single_thread = false, resume = false;
  train->add_option("--config", config_path, "INI run configuration")->required()->check(CLI::ExistingFile);
  train->add_option("--out", out_dir, "output directory")->required();
  train->add_option("--seed", seed, "seed (overrides run.seed)")->required();
  train->add_option("--iterations", iterations, "iteration budget (overrides run.iterations)");
  train->add_flag("--single-thread", single_thread, "serial, bit-reproducible rollouts");
  train->add_flag("--resume", resume, "continue from <out>/checkpoint.mrgr");
  train->add_option("--stop-after", stop_after, "stop after this many iterations, as if interrupted");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint with greedy policies");
  std::string checkpoint, opponent;
  std::size_t episodes = 0;
  std::uint64_t eval_seed = 0;
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--episodes", episodes, "number of episodes")->required()->check(CLI::PositiveNumber);
  eval->add_option("--opponent", opponent, "self | scripted | random | checkpoint path")->required();
  eval->add_option("--seed", eval_seed, "evaluation seed");

  auto* plot = app.add_subcommand("plot", "SVG learning curves from metrics CSVs");
  std::string column, svg_out;
  std::size_t window = 1;
  std::vector<std::string> csvs;
  plot->add_option("--column", column, "column to plot")->required()->check(CLI::IsMember({"mean_return", "win_rate"}));
  plot->add_option("--out", svg_out, "output SVG")->required();
  plot->add_option("--window", window, "moving-average window")->check(CLI::PositiveNumber);
  plot->add_option("csvs", csvs, "metrics CSV files")->required()->check(CLI::ExistingFile);

  auto* check = app.add_subcommand("check", "verification suites");
  check->require_subcommand(1);
  auto* consistency = check->add_subcommand("consistency", "team/individual argmax agreement on random games");
  std::size_t agents = 0, actions = 0, trials = 0;
  std::uint64_t check_seed = 0;
  consistency->add_option("--agents", agents, "agents per game")->required()->check(
      CLI::Range(std::size_t{1}, regret::kMaxCheckAgents));
  consistency->add_option("--actions", actions, "actions per agent")->required()->check(
      CLI::Range(std::size_t{1}, regret::kMaxCheckActions));
  consistency->add_option("--trials", trials, "random games")->required()->check(CLI::PositiveNumber);
  consistency->add_option("--seed", check_seed, "seed")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*train) {
      harness::RunConfig config;
      try {
        config = harness::load_run_config(config_path);
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
      }
      config.seed = seed;
      if (iterations) config.train.iterations = *iterations;
      if (single_thread) config.train.single_thread = true;
      harness::TrainRunOptions options;
      options.resume = resume;
      options.stop_after = stop_after;
      options.log = &std::cerr;
      const auto report = harness::run_train(config, out_dir, options);
      std::cout << "trained " << report.iterations << " iterations into " << out_dir << '\n';
      if (report.last_eval) std::cout << report.last_eval->to_json().dump() << '\n';
    } else if (*eval) {
      const auto report = harness::run_eval(checkpoint, episodes, opponent, eval_seed);
      std::cout << report.to_json().dump() << '\n';
    } else if (*plot) {
      std::vector<std::filesystem::path> paths(csvs.begin(), csvs.end());
      harness::emit_plots(paths, svg_out, {column, window, ""});
    } else if (*consistency) {
      const auto report = regret::consistency_check(agents, actions, trials, check_seed);
      std::cout << report.summary() << '\n';
      if (report.violations() != 0) return kViolation;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return 0;
}
