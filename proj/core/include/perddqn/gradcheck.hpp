#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace perddqn::nn {

struct GradCheckOptions {
  int networks = 20;
  std::size_t batch_size = 8;
  std::vector<std::size_t> layer_sizes{17, 8, 8, 25};
  double step = 1e-6;
  double tolerance = 1e-4;
  /// Denominator floor for the relative error, so entries whose true value is
  /// ~0 are judged by absolute error instead of amplified round-off.
  double scale_floor = 1e-4;
  std::uint64_t seed = 7;
};

struct GradCheckReport {
  int networks = 0;
  std::size_t entries = 0;
  double max_relative_error = 0.0;
  bool passed = false;
};

/// Compares backward_weighted against central finite differences of
/// weighted_loss on random small networks and random weighted batches.
GradCheckReport run_gradcheck(const GradCheckOptions& options = {});

}  // namespace perddqn::nn
