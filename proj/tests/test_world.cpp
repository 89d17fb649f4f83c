#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "perddqn/world.hpp"

namespace perddqn::world {
namespace {

constexpr double kPi = std::numbers::pi;

ObstacleMap open_map(int width, int height, double resolution) {
  std::string text = "resolution " + std::to_string(resolution) + "\nsize " + std::to_string(width) + " " +
                     std::to_string(height) + "\n";
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      text += (r == 0 || c == 0 || r == height - 1 || c == width - 1) ? '#' : '.';
    }
    text += '\n';
  }
  return load_map(text, "open");
}

// Independent oracle: march along the ray in tiny steps until an occupied
// cell is reached.
double march_ray(const ObstacleMap& map, const Pose& pose, double angle, double max_range) {
  constexpr double step = 1e-4;
  for (double t = 0.0; t <= max_range; t += step) {
    if (map.occupied_at(pose.x + t * std::cos(angle), pose.y + t * std::sin(angle))) return t;
  }
  return max_range;
}

TEST(MapIo, SmallestLegalMap) {
  const auto map = load_map("resolution 1\nsize 3 3\n###\n#.#\n###\n");
  EXPECT_EQ(map.width, 3);
  EXPECT_EQ(map.height, 3);
  EXPECT_EQ(map.free_count(), 1u);
}

TEST(MapIo, ResolutionEcho) {
  const auto map = open_map(10, 10, 0.1);
  EXPECT_DOUBLE_EQ(map.resolution, 0.1);
  EXPECT_EQ(map.cells.size(), 100u);
}

TEST(MapIo, TrailingNewlineOptional) {
  EXPECT_NO_THROW(load_map("resolution 1\nsize 3 3\n###\n#.#\n###"));
}

TEST(MapIo, InvalidCharacterNamesCell) {
  try {
    load_map("resolution 1\nsize 4 3\n####\n#X.#\n####\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4);
    EXPECT_EQ(e.column(), 2);
    EXPECT_NE(std::string(e.what()).find("'X'"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("(1, 1)"), std::string::npos);
  }
}

TEST(MapIo, Errors) {
  EXPECT_THROW(load_map("resolution 1\nsize 2 3\n##\n##\n##\n"), DimensionError);
  EXPECT_THROW(load_map("resolution 0\nsize 3 3\n###\n#.#\n###\n"), DimensionError);
  EXPECT_THROW(load_map("resolution 1\nsize 3 3\n#.#\n#.#\n###\n"), BorderError);
  EXPECT_THROW(load_map("resolution 1\nsize 3 3\n###\n#.#\n"), ParseError);
  EXPECT_THROW(load_map("resolution 1\nsize 3 3\n###\n#.#\n###\n###\n"), ParseError);
  EXPECT_THROW(load_map("resolution 1\nsize 3 3\n###\n#..#\n###\n"), ParseError);
  EXPECT_THROW(load_map("res 1\nsize 3 3\n###\n#.#\n###\n"), ParseError);
  EXPECT_THROW(load_map("resolution abc\nsize 3 3\n###\n#.#\n###\n"), ParseError);
  EXPECT_THROW(load_map("resolution 1\nsize 3 3\n###\r\n#.#\n###\n"), ParseError);
}

TEST(MapIo, FormatRoundTrip) {
  const auto map = load_map_file(PERDDQN_MAPS_DIR "/deadzone.txt");
  const auto again = load_map(format_map(map));
  EXPECT_EQ(again.cells, map.cells);
  EXPECT_EQ(again.resolution, map.resolution);
}

TEST(MapIo, ShippedMapsLoad) {
  const auto open = load_map_file(PERDDQN_MAPS_DIR "/open10.txt");
  EXPECT_EQ(open.width, 10);
  EXPECT_EQ(open.name, "open10");
  const auto dz = load_map_file(PERDDQN_MAPS_DIR "/deadzone.txt");
  EXPECT_LT(dz.free_count(), static_cast<std::size_t>((dz.width - 2) * (dz.height - 2)));
}

TEST(Raycast, NoHitClampsToMaxRange) {
  const auto map = open_map(200, 200, 0.1);  // 20 m box
  const auto scan = raycast(map, {10.05, 10.05, 0.3}, 360, 3.5);
  ASSERT_EQ(scan.ranges.size(), 360u);
  for (double r : scan.ranges) EXPECT_EQ(r, 3.5);
}

TEST(Raycast, PerpendicularWallMatchesOracle) {
  const auto map = open_map(60, 60, 0.1);  // walls occupy x < 0.1 and x >= 5.9
  const Pose pose{1.1, 3.0, 0.0};
  // Beam 180 of 360 points along the heading; beam 0 points backwards at x = 0.1.
  const auto scan = raycast(map, pose, 360, 3.5);
  const double oracle = march_ray(map, pose, kPi, 3.5);
  EXPECT_NEAR(scan.ranges[0], 1.0, map.resolution);
  EXPECT_NEAR(scan.ranges[0], oracle, 1e-3);
}

TEST(Raycast, SixtyDegreeIncidenceMatchesOracle) {
  const auto map = open_map(60, 60, 0.1);
  const Pose pose{1.1, 3.0, 0.0};
  // 60 degrees off the wall normal (-x) is absolute angle -2*pi/3; beam k
  // sits at 2*pi*k/360 - pi, so k = 60.
  const auto scan = raycast(map, pose, 360, 3.5);
  const double angle = 2.0 * kPi * 60 / 360 - kPi;
  const double oracle = march_ray(map, pose, angle, 3.5);
  EXPECT_NEAR(scan.ranges[60], 2.0, map.resolution);
  EXPECT_NEAR(scan.ranges[60], oracle, 1e-3);
}

TEST(Raycast, RandomPosesAgreeWithOracle) {
  const auto map = load_map_file(PERDDQN_MAPS_DIR "/deadzone.txt");
  Rng rng = make_rng(11);
  std::uniform_real_distribution<double> ux(0.0, map.world_width());
  std::uniform_real_distribution<double> uh(-kPi, kPi);
  int checked = 0;
  while (checked < 20) {
    const Pose pose{ux(rng), ux(rng), uh(rng)};
    if (map.occupied_at(pose.x, pose.y)) continue;
    const auto scan = raycast(map, pose, 30, 3.5);
    for (int k = 0; k < 30; ++k) {
      const double angle = pose.heading + 2.0 * kPi * k / 30 - kPi;
      EXPECT_NEAR(scan.ranges[static_cast<std::size_t>(k)], march_ray(map, pose, angle, 3.5), 2e-4);
    }
    ++checked;
  }
}

TEST(Raycast, RangesPositiveAndMonotoneUnderObstacleRemoval) {
  auto map = load_map_file(PERDDQN_MAPS_DIR "/deadzone.txt");
  const Pose pose{1.75, 3.0, 0.4};
  const auto before = raycast(map, pose, 360, 3.5);
  for (double r : before.ranges) {
    EXPECT_GT(r, 0.0);
    EXPECT_LE(r, 3.5);
  }
  // Remove the U-trap's closed side.
  for (int r = 3; r <= 8; ++r) map.cells[static_cast<std::size_t>(r * map.width + 8)] = 0;
  const auto after = raycast(map, pose, 360, 3.5);
  for (std::size_t k = 0; k < 360; ++k) EXPECT_GE(after.ranges[k], before.ranges[k]);
}

TEST(Raycast, PoseInObstacleThrows) {
  const auto map = open_map(10, 10, 0.5);
  EXPECT_THROW(raycast(map, {0.2, 0.2, 0.0}, 360, 3.5), PoseInObstacleError);
}

TEST(GroupScan, ConstantInput) {
  LidarScan scan{std::vector<double>(360, 1.7)};
  for (double g : group_scan(scan)) EXPECT_EQ(g, 1.7);
}

TEST(GroupScan, OneBeamPerGroupIsIdentity) {
  LidarScan scan;
  for (int i = 0; i < 15; ++i) scan.ranges.push_back(0.1 * (i + 1));
  const auto g = group_scan(scan);
  for (std::size_t i = 0; i < 15; ++i) EXPECT_EQ(g[i], scan.ranges[i]);
}

TEST(GroupScan, AlternatingPairs) {
  LidarScan scan;
  for (int i = 0; i < 30; ++i) scan.ranges.push_back(i % 2 == 0 ? 1.0 : 2.0);
  for (double g : group_scan(scan)) EXPECT_EQ(g, 1.0);
}

TEST(GroupScan, RandomInputsMatchBruteForceAndArePermutationInvariant) {
  Rng rng = make_rng(5);
  std::uniform_real_distribution<double> u(0.01, 3.5);
  for (int trial = 0; trial < 50; ++trial) {
    LidarScan scan;
    for (int i = 0; i < 90; ++i) scan.ranges.push_back(u(rng));
    const auto grouped = group_scan(scan);
    for (std::size_t g = 0; g < 15; ++g) {
      double m = scan.ranges[g * 6];
      for (std::size_t i = 1; i < 6; ++i) m = std::min(m, scan.ranges[g * 6 + i]);
      EXPECT_EQ(grouped[g], m);
    }
    LidarScan shuffled = scan;
    for (std::size_t g = 0; g < 15; ++g) {
      std::shuffle(shuffled.ranges.begin() + static_cast<std::ptrdiff_t>(g * 6),
                   shuffled.ranges.begin() + static_cast<std::ptrdiff_t>(g * 6 + 6), rng);
    }
    EXPECT_EQ(group_scan(shuffled), grouped);
  }
}

TEST(GroupScan, RejectsIndivisibleBeamCount) {
  EXPECT_THROW(group_scan(LidarScan{std::vector<double>(100, 1.0)}), DivisibilityError);
}

TEST(Kinematics, NullActionIsIdentity) {
  const Pose p{1.0, 2.0, 0.5};
  EXPECT_EQ(step_kinematics(p, {0, 0.0, 0.0}, 0.1), p);
}

TEST(Kinematics, AxisAlignedMotion) {
  const Pose p = step_kinematics({1.0, 2.0, 0.0}, {0, 1.0, 0.0}, 0.1);
  EXPECT_DOUBLE_EQ(p.x, 1.1);
  EXPECT_EQ(p.y, 2.0);
  EXPECT_EQ(p.heading, 0.0);
}

TEST(Kinematics, TurnThenMove) {
  const Pose p = step_kinematics({0.0, 0.0, 0.0}, {0, 1.0, kPi / 2 / 0.1}, 0.1);
  EXPECT_NEAR(p.x, 0.0, 1e-15);
  EXPECT_NEAR(p.y, 0.1, 1e-15);
}

TEST(Kinematics, HeadingWrapsIntoRange) {
  const Pose p = step_kinematics({0.0, 0.0, kPi - 1e-3}, {0, 0.2, 1.0}, 0.1);
  EXPECT_GE(p.heading, -kPi);
  EXPECT_LT(p.heading, kPi);
  EXPECT_NEAR(p.heading, -kPi + 0.1 - 1e-3, 1e-12);
}

TEST(Kinematics, WrapIsIdempotent) {
  Rng rng = make_rng(3);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = wrap_angle(u(rng));
    EXPECT_GE(a, -kPi);
    EXPECT_LT(a, kPi);
    EXPECT_EQ(wrap_angle(a), a);
  }
  EXPECT_EQ(wrap_angle(kPi), -kPi);
}

TEST(Actions, GridBijection) {
  std::set<std::pair<double, double>> seen;
  for (int i = 0; i < kActionCount; ++i) {
    const auto cmd = action_command(i);
    EXPECT_EQ(cmd.index, i);
    EXPECT_EQ(action_index(i / 5, i % 5), i);
    seen.insert({cmd.linear_speed, cmd.angular_rate});
    EXPECT_GT(cmd.linear_speed, 0.0);
  }
  EXPECT_EQ(seen.size(), 25u);
  EXPECT_THROW(action_command(25), std::out_of_range);
  EXPECT_EQ(action_command(12).angular_rate, 0.0);
  EXPECT_EQ(action_command(24).linear_speed, 1.0);
}

TEST(State, GoalFeatures) {
  const auto map = open_map(10, 10, 0.5);
  const WorldConfig cfg;
  const Pose pose{2.5, 2.5, 0.7};
  EXPECT_EQ(compute_state(map, pose, pose, cfg)[15], 0.0);

  const Pose heading_east{1.0, 2.5, 0.0};
  const auto ahead = compute_state(map, heading_east, {3.0, 2.5, 0.0}, cfg);
  EXPECT_EQ(ahead[16], 0.0);
  EXPECT_NEAR(ahead[15], 2.0 / map.diagonal(), 1e-15);

  const auto behind = compute_state(map, {3.0, 2.5, 0.0}, {1.0, 2.5, 0.0}, cfg);
  EXPECT_EQ(std::abs(behind[16]), 1.0);
}

TEST(State, EntriesStayInRangeForRandomFreePoses) {
  const auto map = load_map_file(PERDDQN_MAPS_DIR "/deadzone.txt");
  const WorldConfig cfg;
  Rng rng = make_rng(9);
  std::uniform_real_distribution<double> ux(0.0, map.world_width());
  std::uniform_real_distribution<double> uh(-kPi, kPi);
  int n = 0;
  while (n < 300) {
    const Pose pose{ux(rng), ux(rng), uh(rng)};
    const Pose goal{ux(rng), ux(rng), 0.0};
    if (map.occupied_at(pose.x, pose.y) || map.occupied_at(goal.x, goal.y)) continue;
    const auto s = compute_state(map, pose, goal, cfg);
    for (std::size_t i = 0; i < 16; ++i) {
      EXPECT_GE(s[i], 0.0);
      EXPECT_LE(s[i], 1.0);
    }
    EXPECT_GE(s[16], -1.0);
    EXPECT_LE(s[16], 1.0);
    ++n;
  }
}

TEST(Reward, TerminalCasesAndShaping) {
  const WorldConfig cfg;
  const Pose goal{3.0, 3.0, 0.0};
  const auto reached = compute_reward_and_termination({2.5, 3.0, 0.0}, {2.8, 3.0, 0.0}, goal, 1.0, 5, cfg);
  EXPECT_EQ(reached.reward, 100.0);
  EXPECT_EQ(reached.reason, Outcome::Goal);

  const auto crash = compute_reward_and_termination({1.0, 1.0, 0.0}, {1.1, 1.0, 0.0}, goal, 0.1, 5, cfg);
  EXPECT_EQ(crash.reward, -100.0);
  EXPECT_EQ(crash.reason, Outcome::Collision);

  // Moving on a circle around the goal: no progress.
  const auto idle = compute_reward_and_termination({1.0, 3.0, 0.0}, {3.0, 1.0, 0.0}, goal, 1.0, 5, cfg);
  EXPECT_EQ(idle.reason, Outcome::Running);
  EXPECT_DOUBLE_EQ(idle.reward, -0.05);

  const auto progress = compute_reward_and_termination({1.0, 3.0, 0.0}, {1.1, 3.0, 0.0}, goal, 1.0, 5, cfg);
  EXPECT_NEAR(progress.reward, 10.0 * 0.1 - 0.05, 1e-12);

  const auto timeout = compute_reward_and_termination({1.0, 3.0, 0.0}, {1.1, 3.0, 0.0}, goal, 1.0, 500, cfg);
  EXPECT_EQ(timeout.reason, Outcome::Timeout);
  EXPECT_DOUBLE_EQ(timeout.reward, progress.reward);
}

TEST(Reward, OutcomesAreMutuallyExclusiveWithGoalPrecedence) {
  const WorldConfig cfg;
  const Pose goal{3.0, 3.0, 0.0};
  // Near goal, low lidar and at the step cap at once: goal wins.
  EXPECT_EQ(compute_reward_and_termination(goal, goal, goal, 0.0, 999, cfg).reason, Outcome::Goal);
  EXPECT_EQ(compute_reward_and_termination({0, 0, 0}, {1, 1, 0}, goal, 0.0, 999, cfg).reason, Outcome::Collision);
}

TEST(Sampling, ForcedPairOnTwoCellMap) {
  const auto map = load_map("resolution 0.5\nsize 7 3\n#######\n#.###.#\n#######\n");
  WorldConfig cfg;
  Rng a = make_rng(42);
  Rng b = make_rng(42);
  const auto first = sample_start_goal(map, a, cfg);
  EXPECT_EQ(first, sample_start_goal(map, b, cfg));
  const std::set<double> xs{first.start.x, first.goal.x};
  EXPECT_EQ(xs, (std::set<double>{0.75, 2.75}));
  EXPECT_EQ(first.start.y, 0.75);
}

TEST(Sampling, RespectsSeparationAndClearanceOverManyDraws) {
  const auto map = load_map_file(PERDDQN_MAPS_DIR "/open10.txt");
  const WorldConfig cfg;
  Rng rng = make_rng(1);
  for (int i = 0; i < 10000; ++i) {
    const auto task = sample_start_goal(map, rng, cfg);
    ASSERT_FALSE(task.start.x == task.goal.x && task.start.y == task.goal.y);
    ASSERT_GE(std::hypot(task.start.x - task.goal.x, task.start.y - task.goal.y), cfg.min_separation);
    ASSERT_GE(task.start.heading, -kPi);
    ASSERT_LT(task.start.heading, kPi);
    ASSERT_GE(clearance(map, task.start.x, task.start.y, 1.0), cfg.collision_threshold);
  }
}

TEST(Sampling, ExhaustionErrors) {
  const auto tiny = load_map("resolution 1\nsize 3 3\n###\n#.#\n###\n");
  Rng rng = make_rng(1);
  EXPECT_THROW(sample_start_goal(tiny, rng, WorldConfig{}), SamplingExhaustedError);
  const auto close = load_map("resolution 0.5\nsize 4 3\n####\n#..#\n####\n");
  EXPECT_THROW(sample_start_goal(close, rng, WorldConfig{}), SamplingExhaustedError);
}

TEST(Environment, DeterministicStepSequence) {
  const auto map = load_map_file(PERDDQN_MAPS_DIR "/deadzone.txt");
  auto run = [&] {
    Environment env(map, WorldConfig{});
    Rng rng = make_rng(77);
    std::vector<StepOutcome> outs;
    env.reset(rng);
    std::uniform_int_distribution<int> act(0, kActionCount - 1);
    for (int i = 0; i < 200 && !env.done(); ++i) outs.push_back(env.step(act(rng)));
    return outs;
  };
  const auto a = run();
  const auto b = run();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].next_state, b[i].next_state);
    EXPECT_EQ(a[i].reward, b[i].reward);
    EXPECT_EQ(a[i].reason, b[i].reason);
    EXPECT_EQ(a[i].next_pose, b[i].next_pose);
    EXPECT_EQ(a[i].done, a[i].reason != Outcome::Running);
  }
}

TEST(Environment, TimeoutAtStepCap) {
  const auto map = open_map(40, 40, 0.5);
  WorldConfig cfg;
  cfg.max_steps = 30;
  Environment env(map, cfg);
  // Tight circle far from walls never reaches the goal.
  env.reset(StartGoal{{10.0, 10.0, 0.0}, {15.0, 15.0, 0.0}});
  StepOutcome out;
  int steps = 0;
  while (!env.done()) {
    out = env.step(action_index(0, 4));
    ++steps;
  }
  EXPECT_EQ(steps, 30);
  EXPECT_EQ(out.reason, Outcome::Timeout);
  EXPECT_NEAR(env.path_length(), 30 * 0.2 * 0.1, 1e-12);
  EXPECT_THROW(env.step(0), std::logic_error);
}

TEST(Environment, DrivingIntoWallCollides) {
  const auto map = open_map(10, 10, 0.5);
  Environment env(map, WorldConfig{});
  env.reset(StartGoal{{2.5, 2.5, 0.0}, {1.0, 4.0, 0.0}});
  StepOutcome out;
  while (!env.done()) out = env.step(action_index(4, 2));
  EXPECT_EQ(out.reason, Outcome::Collision);
  EXPECT_EQ(out.reward, -100.0);
  EXPECT_LT(env.pose().x, 4.5);
}

}  // namespace
}  // namespace perddqn::world
