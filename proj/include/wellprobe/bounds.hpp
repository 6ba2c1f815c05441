#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wellprobe/agmon.hpp"
#include "wellprobe/eigensolve.hpp"
#include "wellprobe/measure.hpp"

namespace wellprobe {

namespace tol {
inline constexpr double exp = 1e-6;
}

// Semiclassical energy densities on the eigen-grid, kept in log form as well so
// that exponentially small tails survive. log values are -inf where the
// density is zero and NaN where it is negative (script_E_plus inside K_E).
struct EnergyDensities {
  double eps = 0.0;
  double E = 0.0;
  std::vector<double> x;
  std::vector<double> dpsi;           // fourth-order differences
  std::vector<double> script_E;       // eps^2 psi'^2 + psi^2
  std::vector<double> script_E_plus;  // eps^2 psi'^2 + (V - E) psi^2
  std::vector<double> log_script_E;
  std::vector<double> log_script_E_plus;
};

EnergyDensities energy_densities(const Eigenpair& pair, const Well& well);

// d_{A,E} on the nodes of the pair's grid at the pair's energy.
AgmonProfile profile_for(const Eigenpair& pair, const Well& well);

struct UpperBound {
  double delta_upper = 0.0;  // eps log(|e^{d/eps} psi| + eps / sqrt(|E|+1) |e^{d/eps} psi'|)
  double upper_0 = 0.0;      // eps log(eps |psi'(0)| / sqrt(|E|+1)) + d(0)
  double upper_L = 0.0;
};

// All sums in log space. The profile must live on the pair's grid.
UpperBound agmon_upper_report(const Eigenpair& pair, const Well& well, const AgmonProfile& profile);

struct LowerBound {
  double a = 0.0;
  double b = 0.0;
  double window_distance = 0.0;  // d_{A,E}(U)
  double log_norm = 0.0;         // log |psi|_{L^2(U)}
  double delta_lower = 0.0;      // -eps log |psi|_{L^2(U)} - d_{A,E}(U)
};

// Throws EmptyObservationWindow unless 0 <= a < b <= L.
LowerBound lower_bound_report(const Eigenpair& pair, const Well& well, const AgmonProfile& profile, double a,
                              double b);

// -eps log(eps |psi'| / sqrt(|E|+1)) - d at x = 0 or L.
double boundary_lower_exponent(const Eigenpair& pair, const AgmonProfile& profile, bool at_L);

struct InequalityCheck {
  bool pass = true;
  double worst_margin = 0.0;  // min over pairs x != y of rhs - lhs, pass iff >= -tol::exp
  double worst_x = 0.0;
  double worst_y = 0.0;
  long pairs = 0;
  int components = 0;  // tunneling only
};

inline constexpr int kPairThinning = 8;

// Every kPairThinning-th node (and the last one) enters the pair scan.
std::vector<std::size_t> thinned_nodes(std::size_t n_nodes);

// log E+(x) - log E+(y) <= (2/eps)|int_x^y sqrt(V-E)| + |V'|_inf L / alpha^2 + |q|_inf L / (alpha eps)
// over pairs in one component of {V - E > alpha^2}. Throws EmptyForbiddenRegion.
InequalityCheck tunneling_check(const Eigenpair& pair, const Well& well, const Perturbation& q, double alpha);

// log E(x) - log E(y) <= (1/eps)|x - y| (sup_{I_xy} |V - E + 1| + |q|_inf) over all thinned pairs.
InequalityCheck rough_gronwall_check(const Eigenpair& pair, const Well& well, const Perturbation& q);

// max over the points of |-eps log sqrt(E(x)) - d_{A,E}(x)| with the density
// interpolated linearly between grid nodes.
double envelope_deviation(const Eigenpair& pair, const Well& well, const AgmonProfile& profile,
                          const std::vector<double>& points);

inline constexpr double kControlFloor = 1e-3;

struct GeometricControl {
  std::vector<double> eps;
  std::vector<double> E;
  std::vector<double> values;  // |psi|_{L^2(U)}, or eps |psi'| / sqrt(|E|+1) at the boundary
  double infimum = 0.0;
  bool pass = false;
};

// Window U = [a, b]: requires E(eps) >= V((a+b)/2) - eps for every schedule
// entry. boundary = 0 or L instead of a window: requires E(eps) > V(boundary).
// Violations throw PreconditionViolated.
GeometricControl geometric_control_check(const Well& well, const Perturbation& q, const std::vector<double>& schedule,
                                         const RegimeTarget& target, double a, double b);
GeometricControl geometric_control_boundary(const Well& well, const Perturbation& q,
                                            const std::vector<double>& schedule, const RegimeTarget& target,
                                            bool at_L);

struct BoundsRow {
  double eps = 0.0;
  double E = 0.0;
  int index = 0;
  UpperBound upper;
  std::optional<LowerBound> window;
  double lower_0 = 0.0;
  double lower_L = 0.0;
  InequalityCheck tunneling;  // pass with pairs == 0 when the forbidden region is empty
  InequalityCheck gronwall;
};

struct BoundsOptions {
  std::optional<std::pair<double, double>> window;
  double alpha = 0.3;
};

struct BoundsReport {
  RegimeTarget target;
  std::vector<BoundsRow> rows;  // schedule order
};

// Per schedule entry: the regime eigenpair, its Agmon exponents and both inequality
// scans. Entries are computed in parallel.
BoundsReport bounds_report(const Well& well, const Perturbation& q, const RegimeTarget& target,
                           const std::vector<double>& schedule, const BoundsOptions& options);

struct BoundsVerdict {
  bool pass = true;
  std::vector<std::string> failures;
};

// Lower exponents >= -tol::exp; upper and lower exponents trend_ok; both inequality
// scans pass on every row.
BoundsVerdict verdict(const BoundsReport& report);

}  // namespace wellprobe
