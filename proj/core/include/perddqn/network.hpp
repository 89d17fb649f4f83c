#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "perddqn/common.hpp"

namespace perddqn::nn {

/// 17 inputs, two ReLU hidden layers of 512, 25 linear outputs.
inline const std::vector<std::size_t> kDefaultLayerSizes{17, 512, 512, 25};

struct LayerParams {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd biases;   // out

  std::size_t fan_in() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t fan_out() const { return static_cast<std::size_t>(weights.rows()); }

  friend bool operator==(const LayerParams& a, const LayerParams& b) {
    return a.weights.rows() == b.weights.rows() && a.weights.cols() == b.weights.cols() &&
           a.biases.size() == b.biases.size() && a.weights == b.weights && a.biases == b.biases;
  }
};

/// Dense feed-forward network: ReLU after every layer but the last, which is
/// linear. A plain value type; copying it is a deep parameter copy.
class Network {
 public:
  Network() = default;
  /// Zero-initialized network with the given layer widths (input first).
  explicit Network(std::span<const std::size_t> layer_sizes);

  std::size_t input_size() const;
  std::size_t output_size() const;
  std::size_t parameter_count() const;
  std::vector<std::size_t> layer_sizes() const;

  std::vector<LayerParams>& layers() { return layers_; }
  const std::vector<LayerParams>& layers() const { return layers_; }

  friend bool operator==(const Network&, const Network&) = default;

 private:
  std::vector<LayerParams> layers_;
};

/// He initialization: N(0, 2/fan_in) weights, zero biases.
Network init_network(Rng& rng, std::span<const std::size_t> layer_sizes = kDefaultLayerSizes);

inline Network clone_params(const Network& src) { return src; }

/// Q-values for one input.
Eigen::VectorXd forward(const Network& net, std::span<const double> input);

/// Q-values for a batch; inputs are columns.
Eigen::MatrixXd forward_batch(const Network& net, const Eigen::MatrixXd& inputs);

struct GradientSet {
  std::vector<LayerParams> layers;

  double squared_norm() const;
  void scale(double factor);
  bool all_finite() const;
};

GradientSet zero_gradients(const Network& net);

/// One training sample: the loss touches only output unit `action`.
struct WeightedSample {
  std::span<const double> state;
  int action = 0;
  double target = 0.0;
  double weight = 1.0;
};

struct BackwardResult {
  GradientSet gradients;
  std::vector<double> td_errors;  // signed: target - Q(s, a)
  double loss = 0.0;
};

/// Gradient of L = mean_i w_i * (y_i - Q(s_i, a_i))^2.
BackwardResult backward_weighted(const Network& net, std::span<const WeightedSample> batch);

/// Same loss as backward_weighted, forward only.
double weighted_loss(const Network& net, std::span<const WeightedSample> batch);

void sgd_step(Network& net, const GradientSet& grads, double lr);

/// Rescales grads so their global L2 norm is at most max_norm. Returns the
/// norm before clipping. A non-positive max_norm disables clipping.
double clip_by_global_norm(GradientSet& grads, double max_norm);

/// Binary format: "PERDDQN1", u32 version, u32 layer count, u32 (out, in)
/// per layer, then every layer's weights (row-major) and biases as
/// little-endian f64.
std::string save_params(const Network& net);
void save_params(const Network& net, std::ostream& out);
Network load_params(std::string_view bytes);
void save_params_file(const Network& net, const std::string& path);
Network load_params_file(const std::string& path);

}  // namespace perddqn::nn
