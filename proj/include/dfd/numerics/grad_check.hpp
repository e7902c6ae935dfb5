#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "dfd/error.hpp"
#include "dfd/numerics/parameters.hpp"
#include "dfd/numerics/rng.hpp"
#include "dfd/numerics/tape.hpp"

namespace dfd::num {

// A scalar function traced on the given tape, reading the parameters it
// closes over.
template <typename T>
using ScalarFn = std::function<Var<T>(Tape<T>&)>;

// Precision used for finite-difference references (x87 extended on x86-64).
using Wide = long double;

struct GradCheckOptions {
  // Step of the fourth-order central stencil
  //   (−f(θ+2ε) + 8f(θ+ε) − 8f(θ−ε) + f(θ−2ε)) / 12ε
  double epsilon = 1e-4;
  // Coordinates checked per parameter tensor; larger tensors are sampled.
  std::size_t max_coords_per_param = 64;
  std::uint64_t seed = 0;
  // Lower bound on the denominator |a| + |n| of the relative error. A
  // negative value selects √(machine epsilon) of the analytic precision:
  // gradients smaller than that are below what the analytic arithmetic can
  // resolve against an O(1) loss, and exact zeros (e.g. a bias that shifts
  // every softmax logit equally) make a pure ratio meaningless.
  double denominator_floor = -1.0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
  std::size_t coords_floored = 0;  // coordinates where the floor applied
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Finite-difference derivatives at sampled coordinates of every parameter.
struct NumericGradient {
  std::vector<std::vector<std::size_t>> coords;
  std::vector<std::vector<double>> values;
};

namespace detail {

template <typename T>
T evaluate(const ScalarFn<T>& f) {
  Tape<T> tape(false);
  return f(tape).value().item();
}

template <typename T>
void require_deterministic(const ScalarFn<T>& f) {
  const T a = evaluate(f);
  const T b = evaluate(f);
  if (!(a == b)) {
    throw UsageError("grad_check: function is not deterministic (two forward passes differ)");
  }
}

inline std::vector<std::size_t> sample_coords(std::size_t n, std::size_t cap, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (n <= cap) return idx;
  rng.shuffle(std::span<std::size_t>(idx));
  idx.resize(cap);
  return idx;
}

template <typename A>
double resolve_floor(const GradCheckOptions& opt) {
  if (opt.denominator_floor >= 0.0) return opt.denominator_floor;
  return std::sqrt(static_cast<double>(std::numeric_limits<A>::epsilon()));
}

template <typename A, typename N>
void require_widened(const ParameterSet<A>& narrow, const ParameterSet<N>& wide) {
  if (narrow.size() != wide.size()) throw UsageError("grad_check: parameter sets differ in size");
  for (std::size_t p = 0; p < narrow.size(); ++p) {
    if (wide[p].value.shape() != narrow[p].value.shape()) {
      throw UsageError("grad_check: shape mismatch for " + narrow[p].name);
    }
    auto a = narrow[p].value.data();
    auto b = wide[p].value.data();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (static_cast<N>(a[i]) != b[i]) {
        throw UsageError("grad_check: reference parameters are not the widened ones");
      }
    }
  }
}

}  // namespace detail

// backward() gradients of f with respect to every parameter.
template <typename T>
std::vector<Tensor<T>> analytic_gradients(const ScalarFn<T>& f, ParameterSet<T>& params) {
  params.zero_grad();
  Tape<T> tape;
  Var<T> loss = f(tape);
  tape.backward(loss);
  std::vector<Tensor<T>> grads;
  for (std::size_t i = 0; i < params.size(); ++i) grads.push_back(params[i].grad);
  return grads;
}

template <typename N>
NumericGradient numeric_gradient(const ScalarFn<N>& f, ParameterSet<N>& params,
                                 const GradCheckOptions& opt) {
  detail::require_deterministic(f);
  NumericGradient out;
  Rng rng(opt.seed);
  const N eps = static_cast<N>(opt.epsilon);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto values = params[p].value.data();
    out.coords.push_back(detail::sample_coords(values.size(), opt.max_coords_per_param, rng));
    auto& dst = out.values.emplace_back();
    for (std::size_t i : out.coords.back()) {
      const N saved = values[i];
      auto at = [&](int k) {
        values[i] = saved + static_cast<N>(k) * eps;
        return static_cast<N>(detail::evaluate(f));
      };
      const N f2 = at(2), f1 = at(1), m1 = at(-1), m2 = at(-2);
      values[i] = saved;
      dst.push_back(static_cast<double>((-f2 + 8 * f1 - 8 * m1 + m2) / (12 * eps)));
    }
  }
  return out;
}

// Compares f's backward() gradients with a precomputed reference.
template <typename A>
GradCheckResult compare_gradients(const ScalarFn<A>& f, ParameterSet<A>& params,
                                  const NumericGradient& numeric, const GradCheckOptions& opt) {
  detail::require_deterministic(f);
  if (numeric.coords.size() != params.size()) {
    throw UsageError("grad_check: reference covers a different parameter set");
  }
  const double floor = detail::resolve_floor<A>(opt);
  const auto analytic = analytic_gradients(f, params);
  GradCheckResult result;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t k = 0; k < numeric.coords[p].size(); ++k) {
      const std::size_t i = numeric.coords[p][k];
      const double exact = static_cast<double>(analytic[p][i]);
      const double approx = numeric.values[p][k];
      const double mag = std::fabs(exact) + std::fabs(approx);
      const double rel = std::fabs(exact - approx) / std::max(mag, floor);
      ++result.coords_checked;
      if (mag < floor) ++result.coords_floored;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_param = params[p].name;
        result.worst_index = i;
        result.worst_analytic = exact;
        result.worst_numeric = approx;
      }
    }
  }
  return result;
}

// Max relative error between backward() gradients and finite differences
// evaluated in the same precision. Throws UsageError when f is not
// deterministic.
template <typename T>
GradCheckResult grad_check(const ScalarFn<T>& f, ParameterSet<T>& params,
                           const GradCheckOptions& opt = {}) {
  return compare_gradients(f, params, numeric_gradient(f, params, opt), opt);
}

// Analytic gradients in precision A against finite differences of the
// same function in a wider precision N, evaluated at the same point.
// `wide_params` must hold exactly the A values widened to N.
template <typename A, typename N>
GradCheckResult grad_check_against(const ScalarFn<A>& f, ParameterSet<A>& params,
                                   const ScalarFn<N>& wide_f, ParameterSet<N>& wide_params,
                                   const GradCheckOptions& opt = {}) {
  detail::require_widened(params, wide_params);
  return compare_gradients(f, params, numeric_gradient(wide_f, wide_params, opt), opt);
}

}  // namespace dfd::num
