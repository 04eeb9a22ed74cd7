#include "abm/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace abm::nn {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

namespace {

void accumulate(GradCheckResult& r, double analytic, double numeric) {
  r.max_rel_error = std::max(r.max_rel_error, relative_error(analytic, numeric));
  r.max_abs_error = std::max(r.max_abs_error, std::abs(analytic - numeric));
  ++r.checked;
}

std::vector<std::size_t> spread_indices(std::size_t n, std::size_t max_count) {
  std::vector<std::size_t> out;
  if (n <= max_count) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(i);
    return out;
  }
  for (std::size_t k = 0; k < max_count; ++k) out.push_back(k * n / max_count + (n / max_count) / 2);
  return out;
}

}  // namespace

GradCheckResult grad_check(const std::function<Var(Tape&, Var)>& f, const Tensor& x, double h) {
  Tensor analytic;
  {
    Tape tape;
    Var xv = tape.variable(x);
    Var out = f(tape, xv);
    tape.backward(out);
    analytic = tape.grad(xv);
  }
  auto eval = [&](const Tensor& at) {
    Tape tape(false);
    return f(tape, tape.constant(at)).value().item();
  };
  GradCheckResult r;
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = eval(probe);
    probe[i] = x[i] - h;
    const double down = eval(probe);
    probe[i] = x[i];
    accumulate(r, analytic[i], (up - down) / (2.0 * h));
  }
  return r;
}

GradCheckResult grad_check_parameters(const std::function<Var(Tape&)>& f, ParameterStore& store, double h,
                                      std::size_t max_per_tensor) {
  GradMap analytic;
  {
    Tape tape;
    Var out = f(tape);
    tape.backward(out);
    analytic = tape.parameter_grads();
  }
  auto eval = [&] {
    Tape tape(false);
    return f(tape).value().item();
  };
  GradCheckResult r;
  for (auto& [name, entry] : store.entries()) {
    auto it = analytic.find(name);
    if (it == analytic.end()) continue;
    Tensor& value = entry.value;
    for (std::size_t i : spread_indices(value.size(), max_per_tensor)) {
      const double orig = value[i];
      value[i] = orig + h;
      const double up = eval();
      value[i] = orig - h;
      const double down = eval();
      value[i] = orig;
      accumulate(r, it->second[i], (up - down) / (2.0 * h));
    }
  }
  return r;
}

}  // namespace abm::nn
