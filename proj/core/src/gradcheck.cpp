#include "perddqn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "perddqn/common.hpp"
#include "perddqn/network.hpp"

namespace perddqn::nn {

GradCheckReport run_gradcheck(const GradCheckOptions& options) {
  GradCheckReport report;
  Rng rng = make_rng(options.seed, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> signed_unit(-1.0, 1.0);
  const std::size_t inputs = options.layer_sizes.front();
  const int outputs = static_cast<int>(options.layer_sizes.back());
  std::uniform_int_distribution<int> pick_action(0, outputs - 1);

  for (int n = 0; n < options.networks; ++n) {
    Network net = init_network(rng, options.layer_sizes);
    for (auto& layer : net.layers()) {
      for (Eigen::Index i = 0; i < layer.biases.size(); ++i) layer.biases(i) = 0.1 * signed_unit(rng);
    }

    std::vector<std::vector<double>> states(options.batch_size, std::vector<double>(inputs));
    std::vector<WeightedSample> batch;
    for (auto& s : states) {
      for (auto& v : s) v = unit(rng);
    }
    for (const auto& s : states) batch.push_back({s, pick_action(rng), signed_unit(rng), unit(rng)});

    const BackwardResult analytic = backward_weighted(net, batch);
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      auto check = [&](double& param, double grad) {
        const double saved = param;
        param = saved + options.step;
        const double up = weighted_loss(net, batch);
        param = saved - options.step;
        const double down = weighted_loss(net, batch);
        param = saved;
        const double numeric = (up - down) / (2.0 * options.step);
        const double scale = std::max({std::abs(grad), std::abs(numeric), options.scale_floor});
        report.max_relative_error = std::max(report.max_relative_error, std::abs(grad - numeric) / scale);
        ++report.entries;
      };
      auto& layer = net.layers()[l];
      const auto& g = analytic.gradients.layers[l];
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) check(layer.weights(r, c), g.weights(r, c));
      }
      for (Eigen::Index r = 0; r < layer.biases.size(); ++r) check(layer.biases(r), g.biases(r));
    }
    ++report.networks;
  }
  report.passed = report.max_relative_error < options.tolerance;
  return report;
}

}  // namespace perddqn::nn
