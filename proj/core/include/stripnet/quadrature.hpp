#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace stripnet {

// Thrown when grid refinement fails to converge; carries both estimates so
// callers can report the disagreement.
struct QuadratureError : std::runtime_error {
  QuadratureError(const std::string& what, double coarse_estimate, double fine_estimate)
      : std::runtime_error(what), coarse(coarse_estimate), fine(fine_estimate) {}
  double coarse = 0.0;
  double fine = 0.0;
};

// Composite Simpson rule over [a, b]; subintervals is rounded up to even.
double simpson(const std::function<double(double)>& f, double a, double b,
               int subintervals);

// Simpson with refinement: the grid is doubled until two successive
// estimates agree to rel_tol (Richardson-style convergence check).
double simpson_refined(const std::function<double(double)>& f, double a, double b,
                       int initial_subintervals, double rel_tol = 1e-8,
                       int max_doublings = 14);

}  // namespace stripnet
