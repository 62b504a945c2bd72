#pragma once

#include <functional>
#include <span>
#include <vector>

#include "das/tape.hpp"

namespace das {

/// Builds a scalar on `tape` from the bound parameter handles. Must be
/// deterministic (no dropout) so repeated evaluations agree.
using ScalarFn = std::function<Var(Tape& tape, std::span<const Var> params)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  double tolerance = 0.0;
  std::size_t coordinates = 0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;

  bool passed() const { return max_relative_error <= tolerance; }
};

/// |a - n| / max(|a|, |n|, 1e-8).
double relative_error(double analytic, double numeric);

/// Compares reverse-mode gradients of `fn` against central differences
/// (f(θ+h) − f(θ−h)) / 2h at every coordinate of every parameter.
GradCheckReport grad_check(const ScalarFn& fn, std::vector<Tensor> params, double h = 1e-5,
                           double tolerance = 1e-4);

}  // namespace das
