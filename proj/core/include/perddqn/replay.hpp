#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "perddqn/common.hpp"
#include "perddqn/world.hpp"

namespace perddqn::replay {

struct Transition {
  world::StateVector state{};
  int action = 0;
  double reward = 0.0;
  world::StateVector next_state{};
  bool done = false;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Complete binary tree over leaf values, 1-indexed: node k has children 2k
/// and 2k+1, leaves occupy [capacity, 2*capacity).
class SumTree {
 public:
  explicit SumTree(std::size_t leaves);

  /// Leaf count after power-of-two padding.
  std::size_t capacity() const { return capacity_; }
  double total() const { return nodes_[1]; }
  double leaf(std::size_t i) const { return nodes_[capacity_ + i]; }
  void set(std::size_t i, double value);

  /// Leaf whose prefix-sum interval contains u, for u in [0, total()).
  /// Never returns a zero-valued leaf while total() > 0.
  std::size_t find(double u) const;

  /// Every internal node equals the sum of its children within rel_tol.
  bool consistent(double rel_tol = 1e-9) const;
  std::span<const double> nodes() const { return nodes_; }

 private:
  std::size_t capacity_;
  std::vector<double> nodes_;
};

/// Identifies a stored transition. The serial detects slots that were
/// overwritten after sampling.
struct ReplayHandle {
  std::size_t slot = 0;
  std::uint64_t serial = 0;

  friend bool operator==(const ReplayHandle&, const ReplayHandle&) = default;
};

struct SampleBatch {
  std::vector<Transition> transitions;
  std::vector<ReplayHandle> handles;
  std::vector<double> probabilities;
  std::vector<double> raw_weights;  // (1 / (N * P(i)))^beta
  std::vector<double> weights;      // raw_weights / max(raw_weights)
  double beta = 0.0;

  std::size_t size() const { return transitions.size(); }
};

/// FIFO ring of transitions shared by both buffer kinds.
class TransitionRing {
 public:
  explicit TransitionRing(std::size_t capacity);

  /// Stores t, evicting the oldest entry when full. Returns the slot used.
  std::size_t push(const Transition& t);

  std::size_t capacity() const { return storage_.size(); }
  std::size_t size() const { return size_; }
  const Transition& at(std::size_t slot) const { return storage_.at(slot); }
  std::uint64_t serial(std::size_t slot) const { return serials_.at(slot); }
  ReplayHandle handle(std::size_t slot) const { return {slot, serials_.at(slot)}; }
  bool live(const ReplayHandle& h) const { return h.slot < size_ && serials_[h.slot] == h.serial; }

 private:
  std::vector<Transition> storage_;
  std::vector<std::uint64_t> serials_;
  std::size_t cursor_ = 0;
  std::size_t size_ = 0;
  std::uint64_t next_serial_ = 1;
};

class UniformBuffer {
 public:
  explicit UniformBuffer(std::size_t capacity = 3000);

  void push(const Transition& t) { ring_.push(t); }
  /// Uniform draws with replacement; every weight is 1.
  SampleBatch sample(std::size_t batch_size, Rng& rng) const;

  std::size_t size() const { return ring_.size(); }
  std::size_t capacity() const { return ring_.capacity(); }
  const TransitionRing& ring() const { return ring_; }

 private:
  TransitionRing ring_;
};

struct PerConfig {
  std::size_t capacity = 3000;
  double alpha = 0.6;     // priority exponent
  double epsilon = 1e-3;  // priority floor added to |td|
  double beta = 0.1;      // IS exponent (start value when annealing)
  std::size_t beta_anneal_steps = 0;  // 0 = fixed beta
  bool stratified = false;
};

/// Proportional prioritized replay over a sum tree of p_i^alpha.
class PrioritizedBuffer {
 public:
  explicit PrioritizedBuffer(PerConfig config = {});

  /// New entries get the largest base priority seen so far (1 initially).
  void push(const Transition& t);
  SampleBatch sample(std::size_t batch_size, Rng& rng);
  /// Sets leaf i to (|td_i| + epsilon)^alpha.
  void update_priorities(std::span<const ReplayHandle> handles, std::span<const double> td_errors);

  /// Beta used by the next sample() call.
  double current_beta() const;
  double max_priority() const { return max_priority_; }
  std::size_t size() const { return ring_.size(); }
  std::size_t capacity() const { return ring_.capacity(); }
  const SumTree& tree() const { return tree_; }
  const TransitionRing& ring() const { return ring_; }
  const PerConfig& config() const { return config_; }

 private:
  PerConfig config_;
  TransitionRing ring_;
  SumTree tree_;
  double max_priority_ = 1.0;
  std::size_t sample_calls_ = 0;
};

}  // namespace perddqn::replay
