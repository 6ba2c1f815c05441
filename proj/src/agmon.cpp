#include "wellprobe/agmon.hpp"

#include <algorithm>
#include <cmath>

#include "wellprobe/error.hpp"
#include "wellprobe/quadrature.hpp"

namespace wellprobe {

namespace {

constexpr double kMinPanelFraction = 1e-14;

double effective_energy(const Well& well, double E) { return std::max(E, well.E0()); }

double clamp_to_domain(const Well& well, double x) {
  const double L = well.length();
  const double slack = 1e-14 * L;
  if (!(x >= -slack && x <= L + slack)) {
    fail(ErrorCode::OutOfDomain, "x=" + std::to_string(x) + " is outside [0, " + std::to_string(L) + "]");
  }
  return std::clamp(x, 0.0, L);
}

quad::Integrand forbidden_speed(const Well& well, double E) {
  return [&well, E](double s) { return std::sqrt(std::max(well(s) - E, 0.0)); };
}

// Integral of sqrt((V-E)_+) from the turning point tp_x out to x.
double from_turning_point(const Well& well, double E, double tp_x, double x) {
  return std::abs(quad::toward_endpoint(forbidden_speed(well, E), tp_x, x, tol::quad,
                                        kMinPanelFraction * well.length()));
}

}  // namespace

double agmon_distance(const Well& well, double E, double x) {
  x = clamp_to_domain(well, x);
  E = effective_energy(well, E);
  const TurningPoints tp = turning_points(well, E);
  if (x > tp.x_plus) return from_turning_point(well, E, tp.x_plus, x);
  if (x < tp.x_minus) return from_turning_point(well, E, tp.x_minus, x);
  return 0.0;
}

AgmonProfile agmon_profile(const Well& well, double E, int n_grid) {
  if (n_grid < 64) fail(ErrorCode::PreconditionViolated, "agmon profile needs n_grid >= 64");
  std::vector<double> grid(n_grid);
  const double L = well.length();
  for (int i = 0; i < n_grid; ++i) grid[i] = L * i / (n_grid - 1);
  grid.back() = L;
  return agmon_profile(well, E, std::move(grid));
}

AgmonProfile agmon_profile(const Well& well, double E, std::vector<double> grid) {
  for (double& x : grid) x = clamp_to_domain(well, x);
  if (!std::is_sorted(grid.begin(), grid.end())) {
    fail(ErrorCode::PreconditionViolated, "agmon profile grid must be sorted");
  }
  AgmonProfile profile;
  profile.energy = effective_energy(well, E);
  profile.turning = turning_points(well, profile.energy);
  profile.grid = std::move(grid);
  profile.values.assign(profile.grid.size(), 0.0);

  const auto speed = forbidden_speed(well, profile.energy);
  const std::size_t n = profile.grid.size();
  const double seg_tol = tol::quad / static_cast<double>(std::max<std::size_t>(n, 1));
  const auto& xs = profile.grid;
  auto& d = profile.values;

  // Right side: march outward from x_plus.
  auto right = std::upper_bound(xs.begin(), xs.end(), profile.turning.x_plus);
  if (right != xs.end()) {
    std::size_t j = static_cast<std::size_t>(right - xs.begin());
    d[j] = from_turning_point(well, profile.energy, profile.turning.x_plus, xs[j]);
    for (++j; j < n; ++j) d[j] = d[j - 1] + quad::adaptive(speed, xs[j - 1], xs[j], seg_tol);
  }
  // Left side: march outward from x_minus.
  auto left = std::lower_bound(xs.begin(), xs.end(), profile.turning.x_minus);
  if (left != xs.begin()) {
    std::size_t j = static_cast<std::size_t>(left - xs.begin()) - 1;
    d[j] = from_turning_point(well, profile.energy, profile.turning.x_minus, xs[j]);
    while (j-- > 0) d[j] = d[j + 1] + quad::adaptive(speed, xs[j], xs[j + 1], seg_tol);
  }
  return profile;
}

double AgmonProfile::at(const Well& well, double x) const {
  x = clamp_to_domain(well, x);
  if (turning.contains(x)) return 0.0;
  const auto speed = forbidden_speed(well, energy);
  if (x > turning.x_plus) {
    // Last node in [x_plus, x].
    auto it = std::upper_bound(grid.begin(), grid.end(), x);
    if (it != grid.begin()) {
      const std::size_t i = static_cast<std::size_t>(it - grid.begin()) - 1;
      if (grid[i] > turning.x_plus) return values[i] + quad::adaptive(speed, grid[i], x, tol::quad);
    }
    return from_turning_point(well, energy, turning.x_plus, x);
  }
  // First node in [x, x_minus].
  auto it = std::lower_bound(grid.begin(), grid.end(), x);
  if (it != grid.end()) {
    const std::size_t i = static_cast<std::size_t>(it - grid.begin());
    if (grid[i] < turning.x_minus) return values[i] + quad::adaptive(speed, x, grid[i], tol::quad);
  }
  return from_turning_point(well, energy, turning.x_minus, x);
}

double AgmonProfile::infimum(const Well& well, double a, double b) const {
  if (a > b) std::swap(a, b);
  // d is nonincreasing left of K_E and nondecreasing right of it.
  if (b < turning.x_minus) return at(well, b);
  if (a > turning.x_plus) return at(well, a);
  return 0.0;
}

double AgmonProfile::lipschitz_bound(const Well& well) { return std::sqrt(std::max(well.v_max() - well.E0(), 0.0)); }

}  // namespace wellprobe
