#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "perddqn/network.hpp"
#include "perddqn/replay.hpp"

namespace perddqn::agent {

enum class Algo { Dqn, Ddqn };
enum class ReplayKind { Uniform, Per };

std::string_view to_string(Algo algo);
std::string_view to_string(ReplayKind kind);

struct AgentConfig {
  double epsilon = 0.05;
  double gamma = 0.99;
  double lr = 0.03;
  std::size_t batch_size = 64;
  std::uint64_t target_sync_every = 200;
  Algo algo = Algo::Ddqn;
  ReplayKind replay_kind = ReplayKind::Per;
  double grad_clip = 10.0;  // global-norm clip, <= 0 disables
  std::size_t warmup = 500;  // transitions stored before training starts
  std::vector<std::size_t> layer_sizes = nn::kDefaultLayerSizes;
  replay::PerConfig per;
};

/// Index of the largest entry; ties go to the lowest index.
int argmax(std::span<const double> values);

/// Current network, target network and replay buffer wired as a DQN/DDQN
/// learner. The target network only changes through sync_target().
class Agent {
 public:
  Agent(AgentConfig config, Rng& init_rng);
  Agent(AgentConfig config, nn::Network initial);

  /// Epsilon-greedy over the current network. Always consumes one uniform
  /// draw so the stream layout does not depend on epsilon.
  int select_action(const world::StateVector& state, Rng& rng) const;
  int greedy_action(const world::StateVector& state) const;

  /// y = r if done, else r + gamma * max_a' Q(s', a'; target).
  std::vector<double> compute_targets_dqn(std::span<const replay::Transition> batch) const;
  /// y = r if done, else r + gamma * Q(s', argmax_a' Q(s', a'; current); target).
  std::vector<double> compute_targets_ddqn(std::span<const replay::Transition> batch) const;
  std::vector<double> compute_targets(std::span<const replay::Transition> batch) const;
  /// |y_i - Q(s_i, a_i; current)|
  std::vector<double> td_errors(std::span<const replay::Transition> batch, std::span<const double> targets) const;

  void remember(const replay::Transition& t);
  std::size_t replay_size() const;
  /// True once the buffer holds max(batch_size, warmup) transitions.
  bool ready_to_train() const;

  /// One minibatch update. Returns the weighted batch loss before the step.
  double train_step(Rng& rng);
  void sync_target();

  const nn::Network& current() const { return current_; }
  const nn::Network& target() const { return target_; }
  /// Replaces both networks; used to construct test fixtures.
  void set_networks(nn::Network current, nn::Network target);
  std::uint64_t train_steps() const { return train_steps_; }
  const AgentConfig& config() const { return config_; }
  const replay::PrioritizedBuffer* prioritized() const { return std::get_if<replay::PrioritizedBuffer>(&buffer_); }

 private:
  Eigen::MatrixXd next_states(std::span<const replay::Transition> batch) const;

  AgentConfig config_;
  nn::Network current_;
  nn::Network target_;
  std::variant<replay::UniformBuffer, replay::PrioritizedBuffer> buffer_;
  std::uint64_t train_steps_ = 0;
};

}  // namespace perddqn::agent
