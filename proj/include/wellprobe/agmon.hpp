#pragma once

#include <vector>

#include "wellprobe/potential.hpp"

namespace wellprobe {

namespace tol {
inline constexpr double quad = 1e-10;
}

// Cumulative Agmon distance d_{A,E} sampled on an ordered grid of [0, L].
struct AgmonProfile {
  double energy = 0.0;  // after the E <= E0 substitution
  std::vector<double> grid;
  std::vector<double> values;
  TurningPoints turning;

  // d_{A,E}(x) for arbitrary x in [0, L], integrating from the nearest grid
  // node on the turning-point side, so quadrature accuracy is preserved.
  double at(const Well& well, double x) const;

  // inf of d over [a, b] (the observation-window Agmon distance).
  double infimum(const Well& well, double a, double b) const;

  // Lipschitz constant sqrt(max V - E0) bounding the slope uniformly in E.
  static double lipschitz_bound(const Well& well);
};

// d_{A,E}(x) = |int from K_E to x of sqrt((V - E)_+)|. Energies below E0 are
// replaced by E0. Throws OutOfDomain.
double agmon_distance(const Well& well, double E, double x);

// Uniform grid of n_grid points including both endpoints (n_grid >= 64).
AgmonProfile agmon_profile(const Well& well, double E, int n_grid);

// Arbitrary sorted grid inside [0, L].
AgmonProfile agmon_profile(const Well& well, double E, std::vector<double> grid);

}  // namespace wellprobe
