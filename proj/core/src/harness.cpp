#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <locale>
#include <sstream>

#include "perddqn/harness.hpp"

namespace perddqn::harness {
namespace {

// Stream tags for make_rng; each consumer owns an independent stream so the
// training start/goal sequence is identical across algorithms.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kTaskStream = 1;
constexpr std::uint64_t kActionStream = 2;
constexpr std::uint64_t kReplayStream = 3;
constexpr std::uint64_t kEvalStream = 7;

std::ostringstream fixed_stream(int precision) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out.setf(std::ios::fixed);
  out.precision(precision);
  return out;
}

void put_number(std::ostream& out, double v) {
  if (std::isnan(v)) {
    out << "nan";
  } else {
    out << v;
  }
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

std::string format_record(const EpisodeRecord& r) {
  auto out = fixed_stream(6);
  out << r.episode << ',' << r.steps << ',' << r.cum_reward << ',' << world::to_string(r.outcome) << ',' << r.time_s
      << ',' << r.len_m;
  return out.str();
}

std::string format_summary(const ExperimentSummary& s) {
  auto out = fixed_stream(4);
  out << s.method << ',';
  put_number(out, s.success_rate);
  out << ',';
  put_number(out, s.avg_time_s);
  out << ',';
  put_number(out, s.avg_len_m);
  return out.str();
}

ExperimentSummary summarize(std::string method, std::span<const EpisodeRecord> records) {
  ExperimentSummary s;
  s.method = std::move(method);
  s.episodes = static_cast<int>(records.size());
  int successes = 0;
  double time_sum = 0.0;
  double len_sum = 0.0;
  for (const auto& r : records) {
    if (r.outcome != world::Outcome::Goal) continue;
    ++successes;
    time_sum += r.time_s;
    len_sum += r.len_m;
  }
  s.success_rate = records.empty() ? 0.0 : 100.0 * successes / static_cast<double>(records.size());
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  s.avg_time_s = successes > 0 ? time_sum / successes : nan;
  s.avg_len_m = successes > 0 ? len_sum / successes : nan;
  return s;
}

EpisodeRecord run_episode(world::Environment& env, const world::StartGoal& task, const Policy& policy,
                          const TransitionSink& sink) {
  world::StateVector state = env.reset(task);
  EpisodeRecord record;
  while (true) {
    const int action = policy(state);
    const world::StepOutcome out = env.step(action);
    record.cum_reward += out.reward;
    if (sink) {
      // Timeouts are truncations, not terminal states: keep bootstrapping.
      const bool terminal = out.reason == world::Outcome::Goal || out.reason == world::Outcome::Collision;
      sink(replay::Transition{state, action, out.reward, out.next_state, terminal});
    }
    state = out.next_state;
    if (out.done) {
      record.outcome = out.reason;
      break;
    }
  }
  record.steps = env.steps();
  record.time_s = env.steps() * env.config().dt;
  record.len_m = env.path_length();
  return record;
}

TrainResult train(const RunConfig& config, const world::ObstacleMap& map, std::ostream* csv) {
  if (config.episodes < 0) throw ConfigError("episodes must be >= 0");
  Rng init_rng = make_rng(config.seed, kInitStream);
  Rng task_rng = make_rng(config.seed, kTaskStream);
  Rng action_rng = make_rng(config.seed, kActionStream);
  Rng replay_rng = make_rng(config.seed, kReplayStream);

  agent::Agent learner(config.agent, init_rng);
  world::Environment env(map, config.world);

  TrainResult result;
  result.records.reserve(static_cast<std::size_t>(config.episodes));
  if (csv) *csv << kTrainingCsvHeader << '\n' << std::flush;

  const Policy policy = [&](const world::StateVector& s) { return learner.select_action(s, action_rng); };
  const TransitionSink sink = [&](const replay::Transition& t) {
    learner.remember(t);
    if (learner.ready_to_train()) {
      const double loss = learner.train_step(replay_rng);
      if (!std::isfinite(loss)) {
        throw NumericalError("non-finite loss at training step " + std::to_string(learner.train_steps()));
      }
      result.losses.push_back(loss);
    }
  };

  for (int e = 0; e < config.episodes; ++e) {
    const world::StartGoal task = world::sample_start_goal(map, task_rng, config.world);
    EpisodeRecord record = run_episode(env, task, policy, sink);
    record.episode = e;
    if (csv) *csv << format_record(record) << '\n' << std::flush;
    result.records.push_back(record);
  }
  result.network = learner.current();
  return result;
}

TrainResult train(const RunConfig& config) {
  const world::ObstacleMap map = world::load_map_file(config.map_path);
  std::filesystem::create_directories(config.out_dir);
  std::ofstream csv = open_output(config.out_dir / "train.csv");
  TrainResult result = train(config, map, &csv);
  nn::save_params_file(result.network, (config.out_dir / "params.bin").string());
  return result;
}

std::vector<world::StartGoal> evaluation_pairs(const world::ObstacleMap& map, const world::WorldConfig& config, int n,
                                               std::uint64_t seed) {
  if (n < 1) throw ConfigError("evaluation needs at least one episode");
  Rng rng = make_rng(seed, kEvalStream);
  std::vector<world::StartGoal> pairs;
  pairs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pairs.push_back(world::sample_start_goal(map, rng, config));
  return pairs;
}

Evaluation evaluate_pairs(const nn::Network& net, const world::ObstacleMap& map, const world::WorldConfig& config,
                          std::span<const world::StartGoal> pairs, std::string method) {
  if (pairs.empty()) throw ConfigError("evaluation needs at least one episode");
  world::Environment env(map, config);
  const Policy greedy = [&](const world::StateVector& s) {
    const Eigen::VectorXd q = nn::forward(net, s);
    return agent::argmax(std::span<const double>(q.data(), static_cast<std::size_t>(q.size())));
  };
  Evaluation eval;
  eval.pairs.assign(pairs.begin(), pairs.end());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EpisodeRecord r = run_episode(env, pairs[i], greedy);
    r.episode = static_cast<int>(i);
    eval.records.push_back(r);
  }
  eval.summary = summarize(std::move(method), eval.records);
  return eval;
}

Evaluation evaluate(const nn::Network& net, const world::ObstacleMap& map, const world::WorldConfig& config, int n,
                    std::uint64_t seed, std::string method) {
  const auto pairs = evaluation_pairs(map, config, n, seed);
  return evaluate_pairs(net, map, config, pairs, std::move(method));
}

const std::vector<MethodSpec>& comparison_methods() {
  static const std::vector<MethodSpec> methods{
      {"dqn", agent::Algo::Dqn, agent::ReplayKind::Uniform},
      {"ddqn", agent::Algo::Ddqn, agent::ReplayKind::Uniform},
      {"dqn_per", agent::Algo::Dqn, agent::ReplayKind::Per},
      {"ddqn_per", agent::Algo::Ddqn, agent::ReplayKind::Per},
  };
  return methods;
}

void write_compare_csv(std::ostream& out, std::span<const ExperimentSummary> summaries) {
  out << kCompareCsvHeader << '\n';
  for (const auto& s : summaries) out << format_summary(s) << '\n';
}

std::vector<ExperimentSummary> compare(const RunConfig& config, const CompareOptions& options) {
  const world::ObstacleMap map = world::load_map_file(config.map_path);
  const auto pairs = evaluation_pairs(map, config.world, options.eval_pairs, config.eval_seed);
  if (options.write_files) {
    std::filesystem::create_directories(config.out_dir);
    std::ofstream log = open_output(config.out_dir / "eval_pairs.csv");
    auto row = fixed_stream(6);
    row << "pair,start_x,start_y,start_heading,goal_x,goal_y\n";
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& p = pairs[i];
      row << i << ',' << p.start.x << ',' << p.start.y << ',' << p.start.heading << ',' << p.goal.x << ','
          << p.goal.y << '\n';
    }
    log << row.str();
  }

  std::vector<ExperimentSummary> summaries;
  for (const auto& method : comparison_methods()) {
    if (!options.only.empty() &&
        std::find(options.only.begin(), options.only.end(), method.name) == options.only.end()) {
      continue;
    }
    RunConfig run = config;
    run.agent.algo = method.algo;
    run.agent.replay_kind = method.replay;
    TrainResult trained;
    if (options.write_files) {
      run.out_dir = config.out_dir / method.name;
      std::filesystem::create_directories(run.out_dir);
      std::ofstream csv = open_output(run.out_dir / "train.csv");
      trained = train(run, map, &csv);
      nn::save_params_file(trained.network, (run.out_dir / "params.bin").string());
    } else {
      trained = train(run, map, nullptr);
    }
    Evaluation eval = evaluate_pairs(trained.network, map, config.world, pairs, method.name);
    if (options.on_summary) options.on_summary(eval.summary);
    summaries.push_back(std::move(eval.summary));
  }

  if (options.write_files) {
    std::ofstream csv = open_output(config.out_dir / "compare.csv");
    write_compare_csv(csv, summaries);
    std::ofstream meta = open_output(config.out_dir / "compare_meta.txt");
    meta << "map = " << map.name << '\n'
         << "training_episodes = " << config.episodes << '\n'
         << "seed = " << config.seed << '\n'
         << "eval_seed = " << config.eval_seed << '\n'
         << "eval_pairs = " << options.eval_pairs << '\n'
         << "eval_epsilon = 0\n"
         << "success_rate = percent of evaluation episodes ending at the goal\n"
         << "avg_time_s, avg_len_m = means over successful episodes only (nan when none succeeded)\n"
         << "step_cap = " << config.world.max_steps << " steps, counted as failure (timeout)\n";
  }
  return summaries;
}

}  // namespace perddqn::harness
