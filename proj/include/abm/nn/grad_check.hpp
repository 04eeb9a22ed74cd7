#pragma once

#include <functional>

#include "abm/nn/params.hpp"
#include "abm/nn/tape.hpp"

namespace abm::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
};

/// |a - n| / max(|a|, |n|, floor). Below `floor` the comparison is absolute
/// so that round-off on vanishing gradients does not dominate.
double relative_error(double analytic, double numeric, double floor = 1e-5);

/// Compares the reverse-mode gradient of f at x with central differences
/// (f(x + h e_i) - f(x - h e_i)) / 2h, element by element.
GradCheckResult grad_check(const std::function<Var(Tape&, Var)>& f, const Tensor& x, double h = 1e-4);

/// Same comparison for parameters: `f` must bind them from `store` via
/// Tape::parameter. At most `max_per_tensor` coordinates of each parameter
/// are perturbed, spread evenly through the tensor.
GradCheckResult grad_check_parameters(const std::function<Var(Tape&)>& f, ParameterStore& store,
                                      double h = 1e-4, std::size_t max_per_tensor = 16);

}  // namespace abm::nn
