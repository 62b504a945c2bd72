#include "das/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "das/error.hpp"

namespace das {

namespace {

double evaluate(const ScalarFn& fn, const std::vector<Tensor>& params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const Tensor& p : params) vars.push_back(tape.constant(p));
  const double value = tape.value(fn(tape, vars)).item();
  if (!std::isfinite(value)) throw NumericalError("grad_check: loss is not finite");
  return value;
}

}  // namespace

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / scale;
}

GradCheckReport grad_check(const ScalarFn& fn, std::vector<Tensor> params, double h,
                           double tolerance) {
  if (!(h > 0.0)) throw std::invalid_argument("grad_check: step must be positive");

  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& p : params) vars.push_back(tape.input(p));
    const Var loss = fn(tape, vars);
    if (!std::isfinite(tape.value(loss).item())) {
      throw NumericalError("grad_check: loss is not finite");
    }
    tape.backward(loss);
    for (Var v : vars) analytic.push_back(tape.grad(v));
  }

  GradCheckReport report;
  report.tolerance = tolerance;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      const double original = params[p][i];
      params[p][i] = original + h;
      const double up = evaluate(fn, params);
      params[p][i] = original - h;
      const double down = evaluate(fn, params);
      params[p][i] = original;

      const double numeric = (up - down) / (2.0 * h);
      const double err = relative_error(analytic[p][i], numeric);
      ++report.coordinates;
      if (err > report.max_relative_error || report.coordinates == 1) {
        report.max_relative_error = err;
        report.worst_param = p;
        report.worst_index = i;
        report.analytic_at_worst = analytic[p][i];
        report.numeric_at_worst = numeric;
      }
    }
  }
  return report;
}

}  // namespace das
