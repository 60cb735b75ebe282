#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace cral {

struct NelderMeadOptions {
  double initial_step = 0.01;   // simplex edge along each axis
  double x_tolerance = 1e-10;   // stop once the simplex diameter falls below this
  double f_tolerance = 0.0;     // ... or the spread of vertex values falls below this
  std::size_t max_evaluations = 20000;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
};

/// Derivative-free minimization with the standard reflection / expansion /
/// contraction / shrink moves (coefficients 1, 2, 1/2, 1/2). The returned
/// value never exceeds f(x0).
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::span<const double> x0, const NelderMeadOptions& opts = {});

}  // namespace cral
