#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "perddqn/harness.hpp"

namespace perddqn::harness {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key) + " (expected " +
                    std::string(expected) + ")");
}

template <typename T>
T parse_int(std::string_view key, std::string_view value, T min_value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || out < min_value) {
    bad_value(key, value, "an integer >= " + std::to_string(min_value));
  }
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(out)) {
    bad_value(key, value, "a finite number");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  bad_value(key, value, "true|false");
}

using Setter = void (*)(RunConfig&, std::string_view, std::string_view);

const std::unordered_map<std::string_view, Setter>& setters() {
  static const std::unordered_map<std::string_view, Setter> table{
      {"map", [](RunConfig& c, std::string_view, std::string_view v) { c.map_path = std::string(v); }},
      {"out", [](RunConfig& c, std::string_view, std::string_view v) { c.out_dir = std::string(v); }},
      {"algo",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         if (v == "dqn") c.agent.algo = agent::Algo::Dqn;
         else if (v == "ddqn") c.agent.algo = agent::Algo::Ddqn;
         else bad_value(k, v, "dqn|ddqn");
       }},
      {"replay",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         if (v == "uniform") c.agent.replay_kind = agent::ReplayKind::Uniform;
         else if (v == "per") c.agent.replay_kind = agent::ReplayKind::Per;
         else bad_value(k, v, "uniform|per");
       }},
      {"episodes", [](RunConfig& c, std::string_view k, std::string_view v) { c.episodes = parse_int<int>(k, v, 0); }},
      {"seed",
       [](RunConfig& c, std::string_view k, std::string_view v) { c.seed = parse_int<std::uint64_t>(k, v, 0); }},
      {"eval_seed",
       [](RunConfig& c, std::string_view k, std::string_view v) { c.eval_seed = parse_int<std::uint64_t>(k, v, 0); }},
      {"eval_episodes",
       [](RunConfig& c, std::string_view k, std::string_view v) { c.eval_episodes = parse_int<int>(k, v, 1); }},
      {"epsilon", [](RunConfig& c, std::string_view k, std::string_view v) { c.agent.epsilon = parse_real(k, v); }},
      {"gamma", [](RunConfig& c, std::string_view k, std::string_view v) { c.agent.gamma = parse_real(k, v); }},
      {"lr", [](RunConfig& c, std::string_view k, std::string_view v) { c.agent.lr = parse_real(k, v); }},
      {"batch_size",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         c.agent.batch_size = parse_int<std::size_t>(k, v, 1);
       }},
      {"target_sync_every",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         c.agent.target_sync_every = parse_int<std::uint64_t>(k, v, 1);
       }},
      {"grad_clip", [](RunConfig& c, std::string_view k, std::string_view v) { c.agent.grad_clip = parse_real(k, v); }},
      {"warmup",
       [](RunConfig& c, std::string_view k, std::string_view v) { c.agent.warmup = parse_int<std::size_t>(k, v, 0); }},
      {"hidden_width",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         const auto w = parse_int<std::size_t>(k, v, 1);
         c.agent.layer_sizes = {world::kStateSize, w, w, static_cast<std::size_t>(world::kActionCount)};
       }},
      {"buffer_capacity",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         c.agent.per.capacity = parse_int<std::size_t>(k, v, 1);
       }},
      {"alpha_prio", [](RunConfig& c, std::string_view k, std::string_view v) { c.agent.per.alpha = parse_real(k, v); }},
      {"eps_prio", [](RunConfig& c, std::string_view k, std::string_view v) { c.agent.per.epsilon = parse_real(k, v); }},
      {"beta", [](RunConfig& c, std::string_view k, std::string_view v) { c.agent.per.beta = parse_real(k, v); }},
      {"beta_anneal_steps",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         c.agent.per.beta_anneal_steps = parse_int<std::size_t>(k, v, 0);
       }},
      {"stratified",
       [](RunConfig& c, std::string_view k, std::string_view v) { c.agent.per.stratified = parse_bool(k, v); }},
      {"beam_count",
       [](RunConfig& c, std::string_view k, std::string_view v) { c.world.beam_count = parse_int<int>(k, v, 15); }},
      {"max_range", [](RunConfig& c, std::string_view k, std::string_view v) { c.world.max_range = parse_real(k, v); }},
      {"dt", [](RunConfig& c, std::string_view k, std::string_view v) { c.world.dt = parse_real(k, v); }},
      {"max_steps",
       [](RunConfig& c, std::string_view k, std::string_view v) { c.world.max_steps = parse_int<int>(k, v, 1); }},
      {"goal_radius",
       [](RunConfig& c, std::string_view k, std::string_view v) { c.world.goal_radius = parse_real(k, v); }},
      {"collision_threshold",
       [](RunConfig& c, std::string_view k, std::string_view v) { c.world.collision_threshold = parse_real(k, v); }},
      {"min_separation",
       [](RunConfig& c, std::string_view k, std::string_view v) { c.world.min_separation = parse_real(k, v); }},
      {"goal_reward",
       [](RunConfig& c, std::string_view k, std::string_view v) { c.world.goal_reward = parse_real(k, v); }},
      {"collision_reward",
       [](RunConfig& c, std::string_view k, std::string_view v) { c.world.collision_reward = parse_real(k, v); }},
      {"k_progress",
       [](RunConfig& c, std::string_view k, std::string_view v) { c.world.k_progress = parse_real(k, v); }},
      {"k_time", [](RunConfig& c, std::string_view k, std::string_view v) { c.world.k_time = parse_real(k, v); }},
  };
  return table;
}

}  // namespace

void apply_setting(RunConfig& config, std::string_view key, std::string_view value) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  it->second(config, key, trim(value));
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, setter] : setters()) k.emplace_back(name);
    std::sort(k.begin(), k.end());
    return k;
  }();
  return keys;
}

std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key or value");
    }
    if (!setters().contains(key)) {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    }
    out.emplace_back(std::string(key), std::string(value));
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace perddqn::harness
