#include <algorithm>
#include <bit>
#include <cmath>

#include "perddqn/replay.hpp"

namespace perddqn::replay {

SumTree::SumTree(std::size_t leaves) : capacity_(std::bit_ceil(std::max<std::size_t>(leaves, 1))) {
  nodes_.assign(2 * capacity_, 0.0);
}

void SumTree::set(std::size_t i, double value) {
  if (i >= capacity_) throw std::out_of_range("sum-tree leaf " + std::to_string(i) + " out of range");
  if (!(value >= 0.0) || !std::isfinite(value)) throw NumericalError("sum-tree leaf values must be finite and >= 0");
  std::size_t k = capacity_ + i;
  nodes_[k] = value;
  for (k /= 2; k >= 1; k /= 2) nodes_[k] = nodes_[2 * k] + nodes_[2 * k + 1];
}

std::size_t SumTree::find(double u) const {
  if (!(total() > 0.0)) throw InsufficientDataError("cannot sample from an empty sum tree");
  std::size_t k = 1;
  while (k < capacity_) {
    const double left = nodes_[2 * k];
    const double right = nodes_[2 * k + 1];
    if ((u < left && left > 0.0) || !(right > 0.0)) {
      k = 2 * k;
    } else {
      u -= left;
      k = 2 * k + 1;
    }
  }
  return k - capacity_;
}

bool SumTree::consistent(double rel_tol) const {
  for (std::size_t k = capacity_; k < 2 * capacity_; ++k) {
    if (nodes_[k] < 0.0) return false;
  }
  for (std::size_t k = 1; k < capacity_; ++k) {
    const double sum = nodes_[2 * k] + nodes_[2 * k + 1];
    if (std::abs(nodes_[k] - sum) > rel_tol * std::max(std::abs(sum), 1e-300)) return false;
  }
  return true;
}

TransitionRing::TransitionRing(std::size_t capacity) : storage_(capacity), serials_(capacity, 0) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
}

std::size_t TransitionRing::push(const Transition& t) {
  const std::size_t slot = cursor_;
  storage_[slot] = t;
  serials_[slot] = next_serial_++;
  cursor_ = (cursor_ + 1) % storage_.size();
  size_ = std::min(size_ + 1, storage_.size());
  return slot;
}

UniformBuffer::UniformBuffer(std::size_t capacity) : ring_(capacity) {}

SampleBatch UniformBuffer::sample(std::size_t batch_size, Rng& rng) const {
  if (batch_size == 0 || ring_.size() < batch_size) {
    throw InsufficientDataError("replay holds " + std::to_string(ring_.size()) + " transitions, batch needs " +
                                std::to_string(batch_size));
  }
  SampleBatch batch;
  batch.transitions.reserve(batch_size);
  batch.handles.reserve(batch_size);
  std::uniform_int_distribution<std::size_t> pick(0, ring_.size() - 1);
  const double p = 1.0 / static_cast<double>(ring_.size());
  for (std::size_t i = 0; i < batch_size; ++i) {
    const std::size_t slot = pick(rng);
    batch.transitions.push_back(ring_.at(slot));
    batch.handles.push_back(ring_.handle(slot));
  }
  batch.probabilities.assign(batch_size, p);
  batch.raw_weights.assign(batch_size, 1.0);
  batch.weights.assign(batch_size, 1.0);
  return batch;
}

PrioritizedBuffer::PrioritizedBuffer(PerConfig config)
    : config_(config), ring_(config.capacity), tree_(config.capacity) {
  if (!(config_.epsilon > 0.0)) throw std::invalid_argument("priority epsilon must be positive");
  if (!(config_.alpha >= 0.0)) throw std::invalid_argument("priority exponent must be non-negative");
  if (!(config_.beta >= 0.0)) throw std::invalid_argument("IS exponent must be non-negative");
}

void PrioritizedBuffer::push(const Transition& t) {
  const std::size_t slot = ring_.push(t);
  tree_.set(slot, std::pow(max_priority_, config_.alpha));
}

double PrioritizedBuffer::current_beta() const {
  if (config_.beta_anneal_steps == 0) return config_.beta;
  const double frac =
      std::min(1.0, static_cast<double>(sample_calls_) / static_cast<double>(config_.beta_anneal_steps));
  return config_.beta + (1.0 - config_.beta) * frac;
}

SampleBatch PrioritizedBuffer::sample(std::size_t batch_size, Rng& rng) {
  if (batch_size == 0 || ring_.size() < batch_size) {
    throw InsufficientDataError("replay holds " + std::to_string(ring_.size()) + " transitions, batch needs " +
                                std::to_string(batch_size));
  }
  SampleBatch batch;
  batch.beta = current_beta();
  ++sample_calls_;

  const double total = tree_.total();
  const double n = static_cast<double>(ring_.size());
  const double segment = total / static_cast<double>(batch_size);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  batch.transitions.reserve(batch_size);
  batch.handles.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    double u = config_.stratified ? (static_cast<double>(i) + unit(rng)) * segment : unit(rng) * total;
    u = std::min(u, std::nextafter(total, 0.0));
    const std::size_t slot = tree_.find(u);
    const double prob = tree_.leaf(slot) / total;
    batch.transitions.push_back(ring_.at(slot));
    batch.handles.push_back(ring_.handle(slot));
    batch.probabilities.push_back(prob);
    batch.raw_weights.push_back(std::pow(1.0 / (n * prob), batch.beta));
  }
  const double max_w = *std::max_element(batch.raw_weights.begin(), batch.raw_weights.end());
  batch.weights.reserve(batch_size);
  for (double w : batch.raw_weights) batch.weights.push_back(w / max_w);
  return batch;
}

void PrioritizedBuffer::update_priorities(std::span<const ReplayHandle> handles, std::span<const double> td_errors) {
  if (handles.size() != td_errors.size()) {
    throw std::invalid_argument("handles and td errors differ in length");
  }
  for (const auto& h : handles) {
    if (h.slot >= ring_.size()) {
      throw StaleIndexError("replay slot " + std::to_string(h.slot) + " is out of range");
    }
    if (!ring_.live(h)) {
      throw StaleIndexError("replay slot " + std::to_string(h.slot) + " was overwritten since sampling");
    }
  }
  for (std::size_t i = 0; i < handles.size(); ++i) {
    if (!std::isfinite(td_errors[i])) throw NumericalError("non-finite TD error");
    const double base = std::abs(td_errors[i]) + config_.epsilon;
    max_priority_ = std::max(max_priority_, base);
    tree_.set(handles[i].slot, std::pow(base, config_.alpha));
  }
}

}  // namespace perddqn::replay
