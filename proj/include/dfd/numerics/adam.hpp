#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dfd/error.hpp"
#include "dfd/numerics/parameters.hpp"
#include "dfd/numerics/tensor.hpp"

namespace dfd::num {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment estimates, one pair per parameter, in parameter order.
template <typename T>
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Tensor<T>> first_moment;
  std::vector<Tensor<T>> second_moment;

  AdamState() = default;
  AdamState(const ParameterSet<T>& params, AdamConfig cfg) : config(cfg) {
    if (!(cfg.lr > 0.0) || !(cfg.beta1 > 0.0 && cfg.beta1 < 1.0) ||
        !(cfg.beta2 > 0.0 && cfg.beta2 < 1.0) || !(cfg.eps > 0.0)) {
      throw ConfigError("invalid Adam hyperparameters");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      first_moment.emplace_back(params[i].value.shape());
      second_moment.emplace_back(params[i].value.shape());
    }
  }
};

// One bias-corrected Adam update of every parameter from its `grad` field.
template <typename T>
void adam_step(ParameterSet<T>& params, AdamState<T>& state) {
  if (state.first_moment.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state has " +
                     std::to_string(state.first_moment.size()) + " moments for " +
                     std::to_string(params.size()) + " parameters");
  }
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(c.beta1, t);
  const double correct2 = 1.0 - std::pow(c.beta2, t);
  const T b1 = static_cast<T>(c.beta1), b2 = static_cast<T>(c.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter<T>& p = params[i];
    Tensor<T>& m = state.first_moment[i];
    Tensor<T>& v = state.second_moment[i];
    if (p.grad.shape() != p.value.shape() || m.shape() != p.value.shape() ||
        v.shape() != p.value.shape()) {
      throw ShapeError("adam_step: shape mismatch for parameter " + p.name);
    }
    auto w = p.value.data();
    auto g = p.grad.data();
    auto ms = m.data();
    auto vs = v.data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      ms[j] = b1 * ms[j] + (T{1} - b1) * g[j];
      vs[j] = b2 * vs[j] + (T{1} - b2) * g[j] * g[j];
      const double m_hat = ms[j] / correct1;
      const double v_hat = vs[j] / correct2;
      w[j] = static_cast<T>(w[j] - c.lr * m_hat / (std::sqrt(v_hat) + c.eps));
    }
  }
}

}  // namespace dfd::num
