#ifndef FINMWE_LBFGS_HPP
#define FINMWE_LBFGS_HPP

#include <functional>
#include <vector>

#include "finmwe/errors.hpp"

namespace finmwe::opt {

FINMWE_DEFINE_ERROR(NonFiniteObjective);

struct LbfgsOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;  // on the gradient infinity norm
  int history = 10;
  int max_line_search = 50;
};

struct LbfgsResult {
  std::vector<double> x;
  double value = 0;
  int iterations = 0;
  std::string stop_reason;  // "gradient_tolerance" | "max_iterations"
};

/// Minimizes f(x) by limited-memory BFGS with backtracking (Armijo) line
/// search. The callback fills `grad` (same size as x) and returns the value.
/// Deterministic for a given start point and callback.
LbfgsResult lbfgs_minimize(
    std::vector<double> x0,
    const std::function<double(const std::vector<double>&,
                               std::vector<double>&)>& value_and_grad,
    const LbfgsOptions& opts = {});

}  // namespace finmwe::opt

#endif
