#include "wellprobe/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "wellprobe/error.hpp"

namespace wellprobe::quad {

namespace {

Rule build_gauss_legendre(int n) {
  Rule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = rule.weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return rule;
}

double adaptive_panel(const Integrand& f, double a, double b, double whole, double abs_tol, int depth) {
  const Rule& rule = gauss_legendre(16);
  const double mid = 0.5 * (a + b);
  const double left = apply(rule, f, a, mid);
  const double right = apply(rule, f, mid, b);
  const double refined = left + right;
  if (depth >= 48 || std::abs(refined - whole) <= std::max(abs_tol, 1e-15 * std::abs(refined)) ||
      mid <= a || mid >= b) {
    return refined;
  }
  return adaptive_panel(f, a, mid, left, 0.5 * abs_tol, depth + 1) +
         adaptive_panel(f, mid, b, right, 0.5 * abs_tol, depth + 1);
}

}  // namespace

const Rule& gauss_legendre(int n) {
  if (n < 1) fail(ErrorCode::PreconditionViolated, "Gauss-Legendre rule needs n >= 1");
  static const Rule rule16 = build_gauss_legendre(16);
  if (n == 16) return rule16;
  static std::mutex mutex;
  static std::map<int, Rule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_gauss_legendre(n)).first;
  return it->second;
}

double apply(const Rule& rule, const Integrand& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double centre = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * f(centre + half * rule.nodes[i]);
  return half * sum;
}

double composite(const Integrand& f, double a, double b, int panels, int nodes) {
  const Rule& rule = gauss_legendre(nodes);
  const double w = (b - a) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) sum += apply(rule, f, a + p * w, a + (p + 1) * w);
  return sum;
}

double adaptive(const Integrand& f, double a, double b, double abs_tol) {
  if (a == b) return 0.0;
  const double whole = apply(gauss_legendre(16), f, a, b);
  return adaptive_panel(f, a, b, whole, abs_tol, 0);
}

double toward_endpoint(const Integrand& f, double a, double b, double abs_tol, double min_width) {
  if (a == b) return 0.0;
  const double sign = b > a ? 1.0 : -1.0;
  const double len = std::abs(b - a);
  int levels = 0;
  while (len * std::ldexp(1.0, -(levels + 1)) >= min_width && levels < 1000) ++levels;
  const double panel_tol = abs_tol / (levels + 1);

  double sum = 0.0;
  for (int j = 0; j < levels; ++j) {
    const double outer = a + sign * len * std::ldexp(1.0, -j);
    const double inner = a + sign * len * std::ldexp(1.0, -(j + 1));
    sum += adaptive(f, std::min(inner, outer), std::max(inner, outer), panel_tol);
  }
  const double last = a + sign * len * std::ldexp(1.0, -levels);
  sum += apply(gauss_legendre(16), f, std::min(a, last), std::max(a, last));
  return sign * sum;
}

double inverse_sqrt_weighted(const Integrand& g, const Integrand& E_minus_V, double x_minus, double x_plus,
                             double abs_tol) {
  if (!(x_plus > x_minus)) return 0.0;
  const double mid = 0.5 * (x_minus + x_plus);
  const double t_max = std::sqrt(mid - x_minus);

  const auto from_left = [&](double t) {
    const double x = x_minus + t * t;
    const double w = E_minus_V(x);
    return w > 0.0 ? 2.0 * t * g(x) / std::sqrt(w) : 0.0;
  };
  const auto from_right = [&](double t) {
    const double x = x_plus - t * t;
    const double w = E_minus_V(x);
    return w > 0.0 ? 2.0 * t * g(x) / std::sqrt(w) : 0.0;
  };
  // t_max^2 on each side covers exactly half of the interval.
  return adaptive(from_left, 0.0, t_max, 0.5 * abs_tol) + adaptive(from_right, 0.0, t_max, 0.5 * abs_tol);
}

}  // namespace wellprobe::quad
