#include <cmath>
#include <random>

#include "perddqn/network.hpp"

namespace perddqn::nn {
namespace {

void check_input(const Network& net, std::span<const double> input) {
  if (input.size() != net.input_size()) {
    throw DimensionError("input has " + std::to_string(input.size()) + " entries, network expects " +
                         std::to_string(net.input_size()));
  }
  for (double v : input) {
    if (!std::isfinite(v)) throw NumericalError("non-finite network input");
  }
}

Eigen::MatrixXd pack_states(const Network& net, std::span<const WeightedSample> batch) {
  if (batch.empty()) throw InsufficientDataError("empty training batch");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(net.input_size()), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& s = batch[i];
    check_input(net, s.state);
    if (s.action < 0 || static_cast<std::size_t>(s.action) >= net.output_size()) {
      throw DimensionError("action " + std::to_string(s.action) + " outside network output range");
    }
    if (!(s.weight >= 0.0) || !std::isfinite(s.target)) {
      throw NumericalError("sample weight must be >= 0 and target finite");
    }
    x.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(s.state.data(), x.rows());
  }
  return x;
}

}  // namespace

Network::Network(std::span<const std::size_t> layer_sizes) {
  if (layer_sizes.size() < 2) throw ShapeError("a network needs at least an input and an output size");
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(layer_sizes[l]);
    const auto out = static_cast<Eigen::Index>(layer_sizes[l + 1]);
    if (in == 0 || out == 0) throw ShapeError("layer sizes must be positive");
    layers_.push_back(LayerParams{Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)});
  }
}

std::size_t Network::input_size() const { return layers_.empty() ? 0 : layers_.front().fan_in(); }

std::size_t Network::output_size() const { return layers_.empty() ? 0 : layers_.back().fan_out(); }

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.biases.size());
  return n;
}

std::vector<std::size_t> Network::layer_sizes() const {
  std::vector<std::size_t> sizes;
  if (layers_.empty()) return sizes;
  sizes.push_back(input_size());
  for (const auto& l : layers_) sizes.push_back(l.fan_out());
  return sizes;
}

Network init_network(Rng& rng, std::span<const std::size_t> layer_sizes) {
  Network net(layer_sizes);
  for (auto& layer : net.layers()) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(layer.fan_in())));
    // Row-major draw order keeps the stream layout independent of Eigen storage.
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = dist(rng);
    }
  }
  return net;
}

Eigen::VectorXd forward(const Network& net, std::span<const double> input) {
  check_input(net, input);
  Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(input.data(), static_cast<Eigen::Index>(input.size()));
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::VectorXd z = layers[l].weights * h + layers[l].biases;
    h = l + 1 < layers.size() ? Eigen::VectorXd(z.cwiseMax(0.0)) : std::move(z);
  }
  if (!h.allFinite()) throw NumericalError("non-finite network output");
  return h;
}

Eigen::MatrixXd forward_batch(const Network& net, const Eigen::MatrixXd& inputs) {
  if (static_cast<std::size_t>(inputs.rows()) != net.input_size()) {
    throw DimensionError("batch rows " + std::to_string(inputs.rows()) + " != network input " +
                         std::to_string(net.input_size()));
  }
  Eigen::MatrixXd h = inputs;
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::MatrixXd z = layers[l].weights * h;
    z.colwise() += layers[l].biases;
    h = l + 1 < layers.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : std::move(z);
  }
  if (!h.allFinite()) throw NumericalError("non-finite network output");
  return h;
}

double GradientSet::squared_norm() const {
  double s = 0.0;
  for (const auto& l : layers) s += l.weights.squaredNorm() + l.biases.squaredNorm();
  return s;
}

void GradientSet::scale(double factor) {
  for (auto& l : layers) {
    l.weights *= factor;
    l.biases *= factor;
  }
}

bool GradientSet::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weights.allFinite() || !l.biases.allFinite()) return false;
  }
  return true;
}

GradientSet zero_gradients(const Network& net) {
  GradientSet g;
  for (const auto& l : net.layers()) {
    g.layers.push_back(
        LayerParams{Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()), Eigen::VectorXd::Zero(l.biases.size())});
  }
  return g;
}

BackwardResult backward_weighted(const Network& net, std::span<const WeightedSample> batch) {
  const Eigen::MatrixXd x = pack_states(net, batch);
  const auto& layers = net.layers();
  const std::size_t depth = layers.size();
  const auto n = static_cast<Eigen::Index>(batch.size());

  // activations[0] is the input; pre[l] is the pre-activation of layer l.
  std::vector<Eigen::MatrixXd> activations(depth + 1);
  std::vector<Eigen::MatrixXd> pre(depth);
  activations[0] = x;
  for (std::size_t l = 0; l < depth; ++l) {
    pre[l] = layers[l].weights * activations[l];
    pre[l].colwise() += layers[l].biases;
    activations[l + 1] = l + 1 < depth ? Eigen::MatrixXd(pre[l].cwiseMax(0.0)) : pre[l];
  }
  const Eigen::MatrixXd& q = activations[depth];

  BackwardResult result;
  result.td_errors.resize(batch.size());
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(q.rows(), n);
  const double inv_n = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = batch[static_cast<std::size_t>(i)];
    const double residual = s.target - q(s.action, i);
    result.td_errors[static_cast<std::size_t>(i)] = residual;
    loss += s.weight * residual * residual;
    delta(s.action, i) = -2.0 * s.weight * residual * inv_n;
  }
  result.loss = loss * inv_n;

  result.gradients.layers.resize(depth);
  for (std::size_t l = depth; l-- > 0;) {
    auto& g = result.gradients.layers[l];
    g.weights = delta * activations[l].transpose();
    g.biases = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd upstream = layers[l].weights.transpose() * delta;
      delta = upstream.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  if (!std::isfinite(result.loss) || !result.gradients.all_finite()) {
    throw NumericalError("non-finite loss or gradient in backward pass");
  }
  return result;
}

double weighted_loss(const Network& net, std::span<const WeightedSample> batch) {
  const Eigen::MatrixXd q = forward_batch(net, pack_states(net, batch));
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double residual = batch[i].target - q(batch[i].action, static_cast<Eigen::Index>(i));
    loss += batch[i].weight * residual * residual;
  }
  return loss / static_cast<double>(batch.size());
}

void sgd_step(Network& net, const GradientSet& grads, double lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  auto& layers = net.layers();
  if (grads.layers.size() != layers.size()) throw ShapeError("gradient layer count does not match network");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& g = grads.layers[l];
    if (g.weights.rows() != layers[l].weights.rows() || g.weights.cols() != layers[l].weights.cols() ||
        g.biases.size() != layers[l].biases.size()) {
      throw ShapeError("gradient shape mismatch at layer " + std::to_string(l));
    }
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].weights.noalias() -= lr * grads.layers[l].weights;
    layers[l].biases.noalias() -= lr * grads.layers[l].biases;
  }
}

double clip_by_global_norm(GradientSet& grads, double max_norm) {
  const double norm = std::sqrt(grads.squared_norm());
  if (max_norm > 0.0 && norm > max_norm) grads.scale(max_norm / norm);
  return norm;
}

}  // namespace perddqn::nn
