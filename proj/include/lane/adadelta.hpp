#pragma once

#include <unordered_map>
#include <vector>

#include "lane/tensor.hpp"

namespace lane {

// AdaDelta with a learning-rate multiplier applied to the final step. The
// accumulators track the unscaled delta, so two optimizers fed identical
// gradients keep identical accumulators and their updates stay in the exact
// ratio of their multipliers.
class AdaDelta {
 public:
  AdaDelta(double lr, double rho = 0.95, double eps = 1e-6)
      : lr_(lr), rho_(rho), eps_(eps) {}

  // Applies one update to every parameter in the store and zeroes grads.
  void step(ParameterStore& store);

  double lr() const { return lr_; }
  double rho() const { return rho_; }
  double eps() const { return eps_; }

  // Accumulator access for checkpointing.
  struct State {
    std::vector<double> eg2;  // running mean of squared gradients
    std::vector<double> ed2;  // running mean of squared deltas
  };
  std::unordered_map<const Parameter*, State>& states() { return states_; }

 private:
  double lr_;
  double rho_;
  double eps_;
  std::unordered_map<const Parameter*, State> states_;
};

}  // namespace lane
