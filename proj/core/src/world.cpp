#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "perddqn/world.hpp"

namespace perddqn::world {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Grid lookup with j counted from the bottom row; out of bounds is occupied.
bool occupied_from_bottom(const ObstacleMap& map, int col, int j) {
  if (col < 0 || j < 0 || col >= map.width || j >= map.height) return true;
  return map.occupied(col, map.height - 1 - j);
}

// Amanatides-Woo traversal in cell units. Returns the distance (meters) to the
// boundary of the first occupied cell, or max_range when nothing is hit.
double trace_ray(const ObstacleMap& map, double x, double y, double angle, double max_range) {
  const double px = x / map.resolution;
  const double py = y / map.resolution;
  const double dx = std::cos(angle);
  const double dy = std::sin(angle);
  const double limit = max_range / map.resolution;
  constexpr double inf = std::numeric_limits<double>::infinity();

  int col = static_cast<int>(std::floor(px));
  int j = static_cast<int>(std::floor(py));
  const int step_x = dx > 0.0 ? 1 : -1;
  const int step_y = dy > 0.0 ? 1 : -1;
  double t_max_x = dx > 0.0 ? (col + 1 - px) / dx : (dx < 0.0 ? (col - px) / dx : inf);
  double t_max_y = dy > 0.0 ? (j + 1 - py) / dy : (dy < 0.0 ? (j - py) / dy : inf);
  const double t_delta_x = dx != 0.0 ? 1.0 / std::abs(dx) : inf;
  const double t_delta_y = dy != 0.0 ? 1.0 / std::abs(dy) : inf;

  while (true) {
    double t;
    if (t_max_x < t_max_y) {
      t = t_max_x;
      t_max_x += t_delta_x;
      col += step_x;
    } else {
      t = t_max_y;
      t_max_y += t_delta_y;
      j += step_y;
    }
    if (t >= limit) return max_range;
    if (occupied_from_bottom(map, col, j)) {
      return std::max(t * map.resolution, std::numeric_limits<double>::min());
    }
  }
}

double distance(const Pose& a, const Pose& b) { return std::hypot(a.x - b.x, a.y - b.y); }

Pose cell_center(const ObstacleMap& map, int col, int row) {
  const int j = map.height - 1 - row;
  return Pose{(col + 0.5) * map.resolution, (j + 0.5) * map.resolution, 0.0};
}

}  // namespace

double wrap_angle(double angle) {
  if (angle >= -kPi && angle < kPi) return angle;
  double a = std::fmod(angle + kPi, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  a -= kPi;
  if (a >= kPi) a -= kTwoPi;
  if (a < -kPi) a = -kPi;
  return a;
}

ActionCommand action_command(int index) {
  if (index < 0 || index >= kActionCount) {
    throw std::out_of_range("action index " + std::to_string(index) + " outside [0, 25)");
  }
  return ActionCommand{index, kLinearSpeeds[static_cast<std::size_t>(index / kRateLevels)],
                       kAngularRates[static_cast<std::size_t>(index % kRateLevels)]};
}

int action_index(int speed_idx, int rate_idx) {
  if (speed_idx < 0 || speed_idx >= kSpeedLevels || rate_idx < 0 || rate_idx >= kRateLevels) {
    throw std::out_of_range("speed/rate index outside the 5x5 action grid");
  }
  return kRateLevels * speed_idx + rate_idx;
}

LidarScan raycast(const ObstacleMap& map, const Pose& pose, int beam_count, double max_range) {
  if (beam_count <= 0) throw std::invalid_argument("beam count must be positive");
  if (!(max_range > 0.0)) throw std::invalid_argument("max range must be positive");
  if (map.occupied_at(pose.x, pose.y)) {
    throw PoseInObstacleError("pose (" + std::to_string(pose.x) + ", " + std::to_string(pose.y) +
                              ") is not in a free cell");
  }
  LidarScan scan;
  scan.ranges.resize(static_cast<std::size_t>(beam_count));
  const double increment = kTwoPi / beam_count;
  for (int k = 0; k < beam_count; ++k) {
    const double angle = pose.heading + increment * k - kPi;
    scan.ranges[static_cast<std::size_t>(k)] = trace_ray(map, pose.x, pose.y, angle, max_range);
  }
  return scan;
}

GroupedScan group_scan(const LidarScan& scan) {
  const std::size_t beams = scan.ranges.size();
  if (beams == 0 || beams % kGroupCount != 0) {
    throw DivisibilityError("beam count " + std::to_string(beams) + " is not a positive multiple of 15");
  }
  const std::size_t per_group = beams / kGroupCount;
  GroupedScan out{};
  for (std::size_t g = 0; g < kGroupCount; ++g) {
    const auto first = scan.ranges.begin() + static_cast<std::ptrdiff_t>(g * per_group);
    out[g] = *std::min_element(first, first + static_cast<std::ptrdiff_t>(per_group));
  }
  return out;
}

Pose step_kinematics(const Pose& pose, const ActionCommand& cmd, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  Pose next;
  next.heading = wrap_angle(pose.heading + cmd.angular_rate * dt);
  next.x = pose.x + cmd.linear_speed * std::cos(next.heading) * dt;
  next.y = pose.y + cmd.linear_speed * std::sin(next.heading) * dt;
  return next;
}

namespace {

void fill_goal_features(StateVector& state, const ObstacleMap& map, const Pose& pose, const Pose& goal) {
  const double d = distance(pose, goal);
  state[kGroupCount] = std::min(1.0, d / map.diagonal());
  const double direction = std::atan2(goal.y - pose.y, goal.x - pose.x);
  state[kGroupCount + 1] = wrap_angle(direction - pose.heading) / kPi;
}

}  // namespace

Observation observe(const ObstacleMap& map, const Pose& pose, const Pose& goal, const WorldConfig& config) {
  const auto grouped = group_scan(raycast(map, pose, config.beam_count, config.max_range));
  Observation obs;
  obs.min_range = *std::min_element(grouped.begin(), grouped.end());
  for (std::size_t g = 0; g < kGroupCount; ++g) obs.state[g] = grouped[g] / config.max_range;
  fill_goal_features(obs.state, map, pose, goal);
  return obs;
}

StateVector compute_state(const ObstacleMap& map, const Pose& pose, const Pose& goal, const WorldConfig& config) {
  return observe(map, pose, goal, config).state;
}

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::Running:
      return "running";
    case Outcome::Goal:
      return "goal";
    case Outcome::Collision:
      return "collision";
    case Outcome::Timeout:
      return "timeout";
  }
  return "unknown";
}

RewardResult compute_reward_and_termination(const Pose& prev_pose, const Pose& outcome_pose, const Pose& goal,
                                            double min_lidar, int step_index, const WorldConfig& config) {
  if (step_index < 0) throw std::invalid_argument("step index must be non-negative");
  const double d_now = distance(outcome_pose, goal);
  if (d_now < config.goal_radius) return {config.goal_reward, Outcome::Goal};
  if (min_lidar < config.collision_threshold) return {config.collision_reward, Outcome::Collision};
  const double shaping = config.k_progress * (distance(prev_pose, goal) - d_now) - config.k_time;
  if (step_index >= config.max_steps) return {shaping, Outcome::Timeout};
  return {shaping, Outcome::Running};
}

double clearance(const ObstacleMap& map, double x, double y, double search_radius) {
  const double res = map.resolution;
  const int c0 = static_cast<int>(std::floor((x - search_radius) / res));
  const int c1 = static_cast<int>(std::floor((x + search_radius) / res));
  const int j0 = static_cast<int>(std::floor((y - search_radius) / res));
  const int j1 = static_cast<int>(std::floor((y + search_radius) / res));
  double best = search_radius;
  for (int j = j0; j <= j1; ++j) {
    for (int c = c0; c <= c1; ++c) {
      if (!occupied_from_bottom(map, c, j)) continue;
      const double ddx = std::max({c * res - x, 0.0, x - (c + 1) * res});
      const double ddy = std::max({j * res - y, 0.0, y - (j + 1) * res});
      best = std::min(best, std::hypot(ddx, ddy));
    }
  }
  return best;
}

StartGoal sample_start_goal(const ObstacleMap& map, Rng& rng, const WorldConfig& config) {
  std::vector<Pose> eligible;
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      if (map.occupied(c, r)) continue;
      const Pose center = cell_center(map, c, r);
      if (clearance(map, center.x, center.y, config.collision_threshold) >= config.collision_threshold) {
        eligible.push_back(center);
      }
    }
  }
  if (eligible.size() < 2) {
    throw SamplingExhaustedError("map '" + map.name + "' has fewer than 2 free cells with enough clearance");
  }

  std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
  std::uniform_real_distribution<double> heading(-kPi, kPi);
  for (int attempt = 0; attempt < config.max_sampling_attempts; ++attempt) {
    const std::size_t s = pick(rng);
    const std::size_t g = pick(rng);
    if (s == g || distance(eligible[s], eligible[g]) < config.min_separation) continue;
    StartGoal task{eligible[s], eligible[g]};
    task.start.heading = wrap_angle(heading(rng));
    return task;
  }
  throw SamplingExhaustedError("no start/goal pair at least " + std::to_string(config.min_separation) +
                               " m apart after " + std::to_string(config.max_sampling_attempts) + " attempts");
}

Environment::Environment(ObstacleMap map, WorldConfig config) : map_(std::move(map)), config_(config) {
  if (config_.beam_count <= 0 || config_.beam_count % static_cast<int>(kGroupCount) != 0) {
    throw DivisibilityError("beam count " + std::to_string(config_.beam_count) + " is not a positive multiple of 15");
  }
}

StateVector Environment::reset(Rng& rng) { return reset(sample_start_goal(map_, rng, config_)); }

StateVector Environment::reset(const StartGoal& task) {
  pose_ = task.start;
  goal_ = task.goal;
  steps_ = 0;
  path_length_ = 0.0;
  done_ = false;
  return compute_state(map_, pose_, goal_, config_);
}

StepOutcome Environment::step(int action) {
  if (done_) throw std::logic_error("step() called on a finished episode; call reset() first");
  const ActionCommand cmd = action_command(action);
  const Pose prev = pose_;
  pose_ = step_kinematics(prev, cmd, config_.dt);
  ++steps_;
  path_length_ += cmd.linear_speed * config_.dt;

  StepOutcome out;
  out.next_pose = pose_;
  double min_range = 0.0;
  if (map_.occupied_at(pose_.x, pose_.y)) {
    // Only reachable with a collision threshold below the per-step travel.
    out.next_state.fill(0.0);
    fill_goal_features(out.next_state, map_, pose_, goal_);
  } else {
    const Observation obs = observe(map_, pose_, goal_, config_);
    out.next_state = obs.state;
    min_range = obs.min_range;
  }
  const RewardResult r = compute_reward_and_termination(prev, pose_, goal_, min_range, steps_, config_);
  out.reward = r.reward;
  out.reason = r.reason;
  out.done = r.reason != Outcome::Running;
  done_ = out.done;
  return out;
}

}  // namespace perddqn::world
