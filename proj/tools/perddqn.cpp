// Command-line driver: train, eval, compare, gradcheck.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "CLI11.hpp"
#include "perddqn/gradcheck.hpp"
#include "perddqn/harness.hpp"

namespace {

using perddqn::harness::RunConfig;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr const char* kUsage = "usage: perddqn {train|eval|compare|gradcheck} [options]  (see --help)";

struct CommonFlags {
  std::optional<std::string> map, algo, replay, episodes, seed, config, out;
  std::vector<std::string> sets;

  void attach(CLI::App* cmd) {
    cmd->add_option("--map", map, "Map file");
    cmd->add_option("--algo", algo, "dqn | ddqn");
    cmd->add_option("--replay", replay, "uniform | per");
    cmd->add_option("--episodes", episodes, "Training episodes");
    cmd->add_option("--seed", seed, "Random seed");
    cmd->add_option("--config", config, "Config file of 'key = value' lines");
    cmd->add_option("--out", out, "Output directory");
    cmd->add_option("--set", sets, "Extra key=value override (repeatable)");
  }

  // Defaults, then the config file, then explicit flags.
  RunConfig resolve(RunConfig base) const {
    if (config) {
      for (const auto& [key, value] : perddqn::harness::read_config_file(*config)) {
        perddqn::harness::apply_setting(base, key, value);
      }
    }
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw perddqn::ConfigError("--set expects key=value, got '" + kv + "'");
      perddqn::harness::apply_setting(base, kv.substr(0, eq), kv.substr(eq + 1));
    }
    const std::pair<const char*, const std::optional<std::string>*> flags[] = {
        {"map", &map},   {"algo", &algo}, {"replay", &replay}, {"episodes", &episodes},
        {"seed", &seed}, {"out", &out},
    };
    for (const auto& [key, value] : flags) {
      if (*value) perddqn::harness::apply_setting(base, key, **value);
    }
    return base;
  }
};

void require_map(const RunConfig& config) {
  if (config.map_path.empty()) throw perddqn::ConfigError("--map is required");
}

void print_summary(const perddqn::harness::ExperimentSummary& s) {
  std::cout << perddqn::harness::format_summary(s) << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // Batch activations are a few hundred KiB; keep them off the mmap path so
  // every training step does not pay for fresh page faults.
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
  CLI::App app{"DDQN with prioritized experience replay for lidar-based path planning"};
  app.require_subcommand(1);

  CommonFlags train_flags, eval_flags, compare_flags;

  auto* train_cmd = app.add_subcommand("train", "Train one agent and save its parameters");
  train_flags.attach(train_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "Greedy evaluation of saved parameters");
  eval_flags.attach(eval_cmd);
  std::string params_path;
  std::optional<int> eval_n;
  std::optional<std::uint64_t> eval_seed;
  eval_cmd->add_option("--params", params_path, "Parameter file written by train")->required();
  eval_cmd->add_option("-n,--n", eval_n, "Number of start/goal pairs");
  eval_cmd->add_option("--eval-seed", eval_seed, "Seed for the start/goal pairs");

  auto* compare_cmd = app.add_subcommand("compare", "Train and evaluate dqn, ddqn, dqn_per, ddqn_per");
  compare_flags.attach(compare_cmd);
  int eval_pairs = 50;
  std::optional<std::uint64_t> compare_eval_seed;
  compare_cmd->add_option("--eval-pairs", eval_pairs, "Paired start/goal evaluations per method")
      ->check(CLI::PositiveNumber);
  compare_cmd->add_option("--eval-seed", compare_eval_seed, "Seed for the start/goal pairs");

  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the backward pass");
  perddqn::nn::GradCheckOptions grad_opts;
  grad_cmd->add_option("--nets", grad_opts.networks, "Random networks to check")->check(CLI::PositiveNumber);
  grad_cmd->add_option("--seed", grad_opts.seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "perddqn: " << e.what() << '\n' << kUsage << std::endl;
    return kExitUsage;
  }

  try {
    if (train_cmd->parsed()) {
      const RunConfig config = train_flags.resolve(RunConfig{});
      require_map(config);
      const auto result = perddqn::harness::train(config);
      const auto summary = perddqn::harness::summarize("train", result.records);
      std::cout << "trained " << result.records.size() << " episodes, " << result.losses.size()
                << " updates; wrote " << (config.out_dir / "train.csv").string() << " and "
                << (config.out_dir / "params.bin").string() << std::endl;
      print_summary(summary);
    } else if (eval_cmd->parsed()) {
      RunConfig config = eval_flags.resolve(RunConfig{});
      require_map(config);
      if (eval_n) config.eval_episodes = *eval_n;
      if (eval_seed) config.eval_seed = *eval_seed;
      const auto map = perddqn::world::load_map_file(config.map_path);
      const auto net = perddqn::nn::load_params_file(params_path);
      const auto eval =
          perddqn::harness::evaluate(net, map, config.world, config.eval_episodes, config.eval_seed, "eval");
      std::filesystem::create_directories(config.out_dir);
      std::ofstream csv(config.out_dir / "eval.csv", std::ios::binary | std::ios::trunc);
      csv << perddqn::harness::kTrainingCsvHeader << '\n';
      for (const auto& r : eval.records) csv << perddqn::harness::format_record(r) << '\n';
      std::cout << perddqn::harness::kCompareCsvHeader << std::endl;
      print_summary(eval.summary);
    } else if (compare_cmd->parsed()) {
      RunConfig base;
      base.episodes = 500;
      RunConfig config = compare_flags.resolve(base);
      require_map(config);
      if (compare_eval_seed) config.eval_seed = *compare_eval_seed;
      perddqn::harness::CompareOptions options;
      options.eval_pairs = eval_pairs;
      std::cout << perddqn::harness::kCompareCsvHeader << std::endl;
      options.on_summary = print_summary;
      perddqn::harness::compare(config, options);
    } else if (grad_cmd->parsed()) {
      const auto report = perddqn::nn::run_gradcheck(grad_opts);
      std::cout << "gradcheck: " << report.networks << " networks, " << report.entries
                << " entries, max relative error " << report.max_relative_error << " (tolerance "
                << grad_opts.tolerance << "): " << (report.passed ? "PASS" : "FAIL") << std::endl;
      return report.passed ? kExitOk : kExitRuntime;
    }
  } catch (const perddqn::ConfigError& e) {
    std::cerr << "perddqn: " << e.what() << '\n' << kUsage << std::endl;
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "perddqn: " << e.what() << std::endl;
    return kExitRuntime;
  }
  return kExitOk;
}
