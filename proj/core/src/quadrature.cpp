#include "stripnet/quadrature.hpp"

#include <cmath>

namespace stripnet {

double simpson(const std::function<double(double)>& f, double a, double b,
               int subintervals) {
  if (!(b >= a)) throw std::invalid_argument("simpson: requires b >= a");
  if (subintervals < 2) subintervals = 2;
  if (subintervals % 2) ++subintervals;
  if (a == b) return 0.0;

  const double h = (b - a) / subintervals;
  double sum = f(a) + f(b);
  for (int k = 1; k < subintervals; ++k) {
    sum += f(a + k * h) * (k % 2 ? 4.0 : 2.0);
  }
  return sum * h / 3.0;
}

double simpson_refined(const std::function<double(double)>& f, double a, double b,
                       int initial_subintervals, double rel_tol, int max_doublings) {
  if (initial_subintervals < 2) initial_subintervals = 2;
  double coarse = simpson(f, a, b, initial_subintervals);
  int n = initial_subintervals;
  for (int round = 0; round < max_doublings; ++round) {
    n *= 2;
    const double fine = simpson(f, a, b, n);
    const double scale = std::max({std::fabs(coarse), std::fabs(fine), 1e-300});
    if (std::fabs(fine - coarse) <= rel_tol * scale) return fine;
    coarse = fine;
  }
  throw QuadratureError("simpson_refined: estimates did not converge to tolerance",
                        coarse, simpson(f, a, b, n * 2));
}

}  // namespace stripnet
