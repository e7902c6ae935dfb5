#pragma once

#include "dfd/numerics/grad_check.hpp"

namespace dfd::testing {

struct CheckErrors {
  double err32 = 0.0;
  double err64 = 0.0;
};

// Checks the 32-bit and 64-bit analytic gradients of one function against
// a single extended-precision finite-difference reference.
inline CheckErrors check_both_precisions(const num::ScalarFn<float>& f32, num::ParameterSet<float>& p32,
                                         const num::ScalarFn<double>& f64, num::ParameterSet<double>& p64,
                                         const num::ScalarFn<num::Wide>& fw,
                                         num::ParameterSet<num::Wide>& pw,
                                         const num::GradCheckOptions& opt) {
  num::detail::require_widened(p32, pw);
  num::detail::require_widened(p64, pw);
  const auto reference = num::numeric_gradient(fw, pw, opt);
  CheckErrors e;
  e.err32 = num::compare_gradients(f32, p32, reference, opt).max_rel_error;
  e.err64 = num::compare_gradients(f64, p64, reference, opt).max_rel_error;
  return e;
}

}  // namespace dfd::testing
