#include <algorithm>
#include <cmath>

#include "perddqn/agent.hpp"

namespace perddqn::agent {
namespace {

std::variant<replay::UniformBuffer, replay::PrioritizedBuffer> make_buffer(const AgentConfig& config) {
  if (config.replay_kind == ReplayKind::Per) return replay::PrioritizedBuffer(config.per);
  return replay::UniformBuffer(config.per.capacity);
}

void validate(const AgentConfig& c) {
  if (!(c.epsilon >= 0.0 && c.epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
  if (!(c.gamma >= 0.0 && c.gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  if (!(c.lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (c.batch_size == 0) throw ConfigError("batch size must be positive");
  if (c.target_sync_every == 0) throw ConfigError("target sync period must be positive");
}

}  // namespace

std::string_view to_string(Algo algo) { return algo == Algo::Dqn ? "dqn" : "ddqn"; }

std::string_view to_string(ReplayKind kind) { return kind == ReplayKind::Per ? "per" : "uniform"; }

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

Agent::Agent(AgentConfig config, Rng& init_rng)
    : Agent(config, nn::init_network(init_rng, config.layer_sizes)) {}

Agent::Agent(AgentConfig config, nn::Network initial)
    : config_(std::move(config)), current_(std::move(initial)), target_(current_), buffer_(make_buffer(config_)) {
  validate(config_);
}

int Agent::select_action(const world::StateVector& state, Rng& rng) const {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < config_.epsilon) {
    std::uniform_int_distribution<int> any(0, static_cast<int>(current_.output_size()) - 1);
    return any(rng);
  }
  return greedy_action(state);
}

int Agent::greedy_action(const world::StateVector& state) const {
  const Eigen::VectorXd q = nn::forward(current_, state);
  return argmax(std::span<const double>(q.data(), static_cast<std::size_t>(q.size())));
}

Eigen::MatrixXd Agent::next_states(std::span<const replay::Transition> batch) const {
  if (batch.empty()) throw InsufficientDataError("empty batch");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(world::kStateSize), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    x.col(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::VectorXd>(batch[i].next_state.data(), static_cast<Eigen::Index>(world::kStateSize));
  }
  return x;
}

std::vector<double> Agent::compute_targets_dqn(std::span<const replay::Transition> batch) const {
  const Eigen::MatrixXd q_next = nn::forward_batch(target_, next_states(batch));
  std::vector<double> y(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    y[i] = batch[i].reward;
    if (!batch[i].done) y[i] += config_.gamma * q_next.col(static_cast<Eigen::Index>(i)).maxCoeff();
  }
  return y;
}

std::vector<double> Agent::compute_targets_ddqn(std::span<const replay::Transition> batch) const {
  const Eigen::MatrixXd x = next_states(batch);
  const Eigen::MatrixXd q_select = nn::forward_batch(current_, x);
  const Eigen::MatrixXd q_eval = nn::forward_batch(target_, x);
  std::vector<double> y(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    y[i] = batch[i].reward;
    if (batch[i].done) continue;
    const auto col = static_cast<Eigen::Index>(i);
    const int a_star =
        argmax(std::span<const double>(q_select.col(col).data(), static_cast<std::size_t>(q_select.rows())));
    y[i] += config_.gamma * q_eval(a_star, col);
  }
  return y;
}

std::vector<double> Agent::compute_targets(std::span<const replay::Transition> batch) const {
  return config_.algo == Algo::Ddqn ? compute_targets_ddqn(batch) : compute_targets_dqn(batch);
}

std::vector<double> Agent::td_errors(std::span<const replay::Transition> batch, std::span<const double> targets) const {
  if (targets.size() != batch.size()) throw DimensionError("targets not aligned with batch");
  std::vector<double> delta(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Eigen::VectorXd q = nn::forward(current_, batch[i].state);
    delta[i] = std::abs(targets[i] - q(batch[i].action));
  }
  return delta;
}

void Agent::remember(const replay::Transition& t) {
  if (t.action < 0 || static_cast<std::size_t>(t.action) >= current_.output_size()) {
    throw std::out_of_range("transition action outside the network's action range");
  }
  std::visit([&](auto& buf) { buf.push(t); }, buffer_);
}

std::size_t Agent::replay_size() const {
  return std::visit([](const auto& buf) { return buf.size(); }, buffer_);
}

bool Agent::ready_to_train() const { return replay_size() >= std::max(config_.batch_size, config_.warmup); }

double Agent::train_step(Rng& rng) {
  if (replay_size() < config_.batch_size) {
    throw InsufficientDataError("replay holds " + std::to_string(replay_size()) + " transitions, batch needs " +
                                std::to_string(config_.batch_size));
  }
  replay::SampleBatch batch = std::visit([&](auto& buf) { return buf.sample(config_.batch_size, rng); }, buffer_);
  const std::vector<double> targets = compute_targets(batch.transitions);

  std::vector<nn::WeightedSample> samples;
  samples.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& t = batch.transitions[i];
    samples.push_back({t.state, t.action, targets[i], batch.weights[i]});
  }
  nn::BackwardResult grad = nn::backward_weighted(current_, samples);
  nn::clip_by_global_norm(grad.gradients, config_.grad_clip);
  nn::sgd_step(current_, grad.gradients, config_.lr);

  if (auto* per = std::get_if<replay::PrioritizedBuffer>(&buffer_)) {
    per->update_priorities(batch.handles, grad.td_errors);
  }
  ++train_steps_;
  if (train_steps_ % config_.target_sync_every == 0) sync_target();
  return grad.loss;
}

void Agent::sync_target() { target_ = nn::clone_params(current_); }

void Agent::set_networks(nn::Network current, nn::Network target) {
  if (current.layer_sizes() != target.layer_sizes()) throw ShapeError("current and target shapes differ");
  current_ = std::move(current);
  target_ = std::move(target);
}

}  // namespace perddqn::agent
