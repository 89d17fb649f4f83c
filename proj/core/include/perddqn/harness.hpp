#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "perddqn/agent.hpp"
#include "perddqn/world.hpp"

namespace perddqn::harness {

struct RunConfig {
  std::filesystem::path map_path;
  agent::AgentConfig agent;
  world::WorldConfig world;
  int episodes = 2500;
  std::uint64_t seed = 1;
  std::uint64_t eval_seed = 2024;
  int eval_episodes = 100;
  std::filesystem::path out_dir = "runs";
};

/// Applies one `key = value` setting. Unknown keys and malformed values
/// throw ConfigError naming the key or value.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

/// Parses flat `key = value` lines with `#` comments into ordered settings.
std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text);
std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path);

/// Keys accepted by apply_setting.
const std::vector<std::string>& config_keys();

struct EpisodeRecord {
  int episode = 0;
  int steps = 0;
  double cum_reward = 0.0;
  world::Outcome outcome = world::Outcome::Timeout;
  double time_s = 0.0;
  double len_m = 0.0;

  friend bool operator==(const EpisodeRecord&, const EpisodeRecord&) = default;
};

struct ExperimentSummary {
  std::string method;
  double success_rate = 0.0;  // percent
  double avg_time_s = 0.0;    // over successful episodes, NaN when none
  double avg_len_m = 0.0;
  int episodes = 0;
};

inline constexpr std::string_view kTrainingCsvHeader = "episode,steps,cum_reward,outcome,time_s,len_m";
inline constexpr std::string_view kCompareCsvHeader = "method,success_rate,avg_time_s,avg_len_m";

std::string format_record(const EpisodeRecord& record);
std::string format_summary(const ExperimentSummary& summary);
ExperimentSummary summarize(std::string method, std::span<const EpisodeRecord> records);

/// Runs one episode with the given action policy; the callback sees every
/// transition in order.
using Policy = std::function<int(const world::StateVector&)>;
using TransitionSink = std::function<void(const replay::Transition&)>;
EpisodeRecord run_episode(world::Environment& env, const world::StartGoal& task, const Policy& policy,
                          const TransitionSink& sink = {});

struct TrainResult {
  nn::Network network;
  std::vector<EpisodeRecord> records;
  std::vector<double> losses;
};

/// Trains one agent on `map`. When `csv` is non-null every episode row is
/// written and flushed as soon as the episode ends.
TrainResult train(const RunConfig& config, const world::ObstacleMap& map, std::ostream* csv = nullptr);

/// Loads the map, writes <out>/train.csv and <out>/params.bin.
TrainResult train(const RunConfig& config);

/// The paired start/goal list used by evaluate for a given seed.
std::vector<world::StartGoal> evaluation_pairs(const world::ObstacleMap& map, const world::WorldConfig& config, int n,
                                               std::uint64_t seed);

struct Evaluation {
  ExperimentSummary summary;
  std::vector<EpisodeRecord> records;
  std::vector<world::StartGoal> pairs;
};

/// Greedy (epsilon = 0) rollouts over the given tasks.
Evaluation evaluate_pairs(const nn::Network& net, const world::ObstacleMap& map, const world::WorldConfig& config,
                          std::span<const world::StartGoal> pairs, std::string method = {});
Evaluation evaluate(const nn::Network& net, const world::ObstacleMap& map, const world::WorldConfig& config, int n,
                    std::uint64_t seed, std::string method = {});

struct MethodSpec {
  std::string name;
  agent::Algo algo;
  agent::ReplayKind replay;
};

/// dqn, ddqn, dqn_per, ddqn_per
const std::vector<MethodSpec>& comparison_methods();

struct CompareOptions {
  int eval_pairs = 50;
  bool write_files = true;
  /// Restricts training to these method names; empty runs all four.
  std::vector<std::string> only;
  std::function<void(const ExperimentSummary&)> on_summary;
};

/// Trains every method with identical seeds and budgets and evaluates each on
/// the same start/goal pairs. Writes <out>/compare.csv, <out>/compare_meta.txt
/// and <out>/<method>/{train.csv,params.bin}.
std::vector<ExperimentSummary> compare(const RunConfig& config, const CompareOptions& options = {});

void write_compare_csv(std::ostream& out, std::span<const ExperimentSummary> summaries);

}  // namespace perddqn::harness
