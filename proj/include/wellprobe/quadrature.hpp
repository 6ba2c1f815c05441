#pragma once

#include <functional>
#include <vector>

namespace wellprobe::quad {

struct Rule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

// n-point Gauss-Legendre rule (Newton on P_n, cached for n = 16).
const Rule& gauss_legendre(int n);

using Integrand = std::function<double(double)>;

double apply(const Rule& rule, const Integrand& f, double a, double b);

// Fixed composite rule on `panels` equal panels.
double composite(const Integrand& f, double a, double b, int panels, int nodes = 16);

// Adaptive bisection of 16-node panels until the two-half estimate agrees
// with the whole-panel estimate to `abs_tol`.
double adaptive(const Integrand& f, double a, double b, double abs_tol);

// Integral over [a, b] where f has an algebraic (e.g. square-root) zero or
// kink at the endpoint `a` (which may be the right end when a > b). Panels are
// refined geometrically toward `a` with ratio 1/2 down to `min_width`, then
// each panel is integrated adaptively. Orientation follows the sign of b - a.
double toward_endpoint(const Integrand& f, double a, double b, double abs_tol, double min_width);

// Integral of g(x) / sqrt(E - V(x)) over [x_minus, x_plus] where V(x_pm) = E
// with V'(x_pm) != 0. Substituting x = x_minus + t^2 and x = x_plus - t^2 on
// the two halves removes the inverse square-root endpoint blow-up.
double inverse_sqrt_weighted(const Integrand& g, const Integrand& E_minus_V, double x_minus, double x_plus,
                             double abs_tol);

}  // namespace wellprobe::quad
