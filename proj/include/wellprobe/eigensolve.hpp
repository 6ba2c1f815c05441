#pragma once

#include <string>
#include <vector>

#include "wellprobe/potential.hpp"

namespace wellprobe {

// Uniform grid with n_interior unknowns; nodes x_i = i h for i = 0..n+1, the
// two end nodes carrying the Dirichlet zeros.
class Grid {
 public:
  Grid(double L, int n_interior);

  int n_interior() const noexcept { return n_; }
  double length() const noexcept { return L_; }
  double spacing() const noexcept { return h_; }
  double node(int i) const noexcept { return i == n_ + 1 ? L_ : i * h_; }

  // The grid with spacing halved exactly (2n + 1 interior nodes).
  Grid refined() const { return Grid(L_, 2 * n_ + 1); }

 private:
  double L_;
  int n_;
  double h_;
};

inline constexpr int kMaxGridNodes = 2'000'000;

// n_interior = ceil(20 L sqrt(energy_span + 1) / eps), energy_span being the
// largest E - E0 of interest. Throws ConfigError beyond kMaxGridNodes.
Grid auto_grid(double L, double energy_span, double eps);

// Finite-difference P_eps = -eps^2 d^2/dx^2 + V + q_eps with Dirichlet rows
// eliminated. diag[i] belongs to node i + 1.
struct TridiagonalOperator {
  double eps = 0.0;
  Grid grid{1.0, 32};
  std::vector<double> potential;  // V + q_eps at the interior nodes
  std::vector<double> diag;
  double off = 0.0;
  double norm = 0.0;    // max(|Gershgorin bounds|), cached by assemble
  std::string warning;  // resolution warning, empty when resolved

  double gershgorin_lower() const;
  double gershgorin_upper() const;
  double norm_bound() const;  // largest |Gershgorin bound|
  double eigen_tolerance(double E) const;
  void apply(const std::vector<double>& v, std::vector<double>& out) const;
};

// Throws GridTooCoarse when h > eps / 2; warns (operator.warning) when
// h > eps / (10 sqrt(max V - min V + 1)).
TridiagonalOperator assemble(const Potential& potential, const Perturbation& q, double eps, const Grid& grid);

// Number of eigenvalues strictly below sigma (LDL^T inertia).
int sturm_count(const TridiagonalOperator& op, double sigma);

// The k-th eigenvalue (0-based), bisected to floating-point resolution.
double eigenvalue_by_index(const TridiagonalOperator& op, int k);

// All eigenvalues in [lo, hi], ascending. Throws WindowEmpty.
std::vector<double> eigenvalues_in_window(const TridiagonalOperator& op, double lo, double hi);

// The k lowest eigenvalues, ascending.
std::vector<double> lowest_eigenvalues(const TridiagonalOperator& op, int k);

// Index of the eigenvalue nearest E (ties go to the lower one).
int nearest_index(const TridiagonalOperator& op, double E);

struct Eigenpair {
  double eps = 0.0;
  double E = 0.0;
  int index = 0;
  double h = 0.0;
  std::vector<double> x;    // all grid nodes including 0 and L
  std::vector<double> psi;  // psi(x), with psi(0) = psi(L) = 0
  double dpsi0 = 0.0;       // psi'(0+), one-sided second order
  double dpsiL = 0.0;       // psi'(L-)
  double residual_norm = 0.0;
  double l2_norm = 0.0;
  int iterations = 0;

  int node_count() const;
};

// Inverse iteration with shift E_approx, one twisted-factorisation solve per
// step, Rayleigh-quotient shift updates; normalised with the trapezoid rule
// and signed so that psi'(0) > 0. Throws NoConvergence, DegenerateCluster.
Eigenpair eigenpair(const TridiagonalOperator& op, double E_approx);

// Discrete L^2 norm of (P_eps - E) psi.
double residual(const Eigenpair& pair, const TridiagonalOperator& op);

// Richardson extrapolation of the k-th eigenvalue over grid and grid.refined().
double richardson_eigenvalue(const Potential& potential, const Perturbation& q, double eps, const Grid& grid,
                             int k);

struct ShootingResult {
  double E = 0.0;
  int nodes = 0;          // interior zeros of the shooting solution below E
  double theta_L = 0.0;   // Pruefer phase at x = L for the returned E
  long steps = 0;
};

// Independent oracle: scaled Pruefer phase integrated by adaptive RK4; the k-th
// Dirichlet eigenvalue is where theta(L) = (k + 1) pi. Throws PhaseOverflow.
ShootingResult shooting_eigenvalue(const Potential& potential, const Perturbation& q, double eps, int k);

// Pruefer phase at x = L for trial energy E (exposed for tests).
double pruefer_phase(const Potential& potential, const Perturbation& q, double eps, double E, long* steps = nullptr);

}  // namespace wellprobe
