#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "perddqn/common.hpp"

namespace perddqn::world {

inline constexpr std::size_t kGroupCount = 15;
inline constexpr std::size_t kStateSize = kGroupCount + 2;
inline constexpr int kSpeedLevels = 5;
inline constexpr int kRateLevels = 5;
inline constexpr int kActionCount = kSpeedLevels * kRateLevels;

inline constexpr std::array<double, kSpeedLevels> kLinearSpeeds{0.2, 0.4, 0.6, 0.8, 1.0};
inline constexpr std::array<double, kRateLevels> kAngularRates{-1.0, -0.5, 0.0, 0.5, 1.0};

/// Network input: 15 grouped lidar minima scaled by max range, goal distance
/// scaled by the map diagonal, and goal bearing scaled by pi.
using StateVector = std::array<double, kStateSize>;
using GroupedScan = std::array<double, kGroupCount>;

/// Closed occupancy grid. Row 0 is the top (max-y) row; world coordinates
/// put the origin at the bottom-left corner of the grid.
struct ObstacleMap {
  int width = 0;
  int height = 0;
  double resolution = 0.0;
  std::vector<std::uint8_t> cells;  // row-major, 1 = occupied
  std::string name;

  bool occupied(int col, int row) const {
    return cells[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col)] != 0;
  }
  /// Lookup by world position; anything outside the grid counts as occupied.
  bool occupied_at(double x, double y) const;
  bool in_bounds(int col, int row) const { return col >= 0 && row >= 0 && col < width && row < height; }

  std::size_t free_count() const;
  double diagonal() const;
  double world_width() const { return width * resolution; }
  double world_height() const { return height * resolution; }
};

ObstacleMap load_map(std::string_view text, std::string name = {});
ObstacleMap load_map_file(const std::filesystem::path& path);
std::string format_map(const ObstacleMap& map);

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // [-pi, pi)

  friend bool operator==(const Pose&, const Pose&) = default;
};

/// Wraps an angle into [-pi, pi). Values already in range are returned as is.
double wrap_angle(double angle);

struct ActionCommand {
  int index = 0;
  double linear_speed = 0.0;
  double angular_rate = 0.0;
};

/// index = 5 * speed_idx + rate_idx.
ActionCommand action_command(int index);
int action_index(int speed_idx, int rate_idx);

struct LidarScan {
  std::vector<double> ranges;
};

/// Beam k is cast at heading + 2*pi*k/B - pi. Throws PoseInObstacleError when
/// the pose is not in a free cell.
LidarScan raycast(const ObstacleMap& map, const Pose& pose, int beam_count, double max_range);

/// Minimum of each of 15 equal contiguous beam groups.
GroupedScan group_scan(const LidarScan& scan);

/// Turn-then-move Euler step of the unicycle model.
Pose step_kinematics(const Pose& pose, const ActionCommand& cmd, double dt);

struct WorldConfig {
  int beam_count = 360;
  double max_range = 3.5;
  double dt = 0.1;
  int max_steps = 500;
  double goal_radius = 0.3;
  double collision_threshold = 0.15;
  double min_separation = 2.0;
  double goal_reward = 100.0;
  double collision_reward = -100.0;
  double k_progress = 10.0;
  double k_time = 0.05;
  int max_sampling_attempts = 10000;
};

struct Observation {
  StateVector state{};
  double min_range = 0.0;
};

Observation observe(const ObstacleMap& map, const Pose& pose, const Pose& goal, const WorldConfig& config);
StateVector compute_state(const ObstacleMap& map, const Pose& pose, const Pose& goal, const WorldConfig& config);

enum class Outcome { Running, Goal, Collision, Timeout };

std::string_view to_string(Outcome outcome);

struct RewardResult {
  double reward = 0.0;
  Outcome reason = Outcome::Running;
};

/// step_index is the number of steps executed so far in the episode,
/// including the one being scored.
RewardResult compute_reward_and_termination(const Pose& prev_pose, const Pose& outcome_pose, const Pose& goal,
                                            double min_lidar, int step_index, const WorldConfig& config);

struct StartGoal {
  Pose start;
  Pose goal;

  friend bool operator==(const StartGoal&, const StartGoal&) = default;
};

/// Distance from a point to the nearest occupied cell (box distance).
double clearance(const ObstacleMap& map, double x, double y, double search_radius);

StartGoal sample_start_goal(const ObstacleMap& map, Rng& rng, const WorldConfig& config);

struct StepOutcome {
  StateVector next_state{};
  double reward = 0.0;
  bool done = false;
  Outcome reason = Outcome::Running;
  Pose next_pose;
};

/// One episode at a time over a fixed map.
class Environment {
 public:
  Environment(ObstacleMap map, WorldConfig config);

  StateVector reset(Rng& rng);
  StateVector reset(const StartGoal& task);
  StepOutcome step(int action);

  const ObstacleMap& map() const { return map_; }
  const WorldConfig& config() const { return config_; }
  const Pose& pose() const { return pose_; }
  const Pose& goal() const { return goal_; }
  int steps() const { return steps_; }
  double path_length() const { return path_length_; }
  bool done() const { return done_; }

 private:
  ObstacleMap map_;
  WorldConfig config_;
  Pose pose_;
  Pose goal_;
  int steps_ = 0;
  double path_length_ = 0.0;
  bool done_ = true;
};

}  // namespace perddqn::world
