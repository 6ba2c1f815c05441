#include "wellprobe/eigensolve.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numbers>
#include <sstream>

#include "wellprobe/error.hpp"

namespace wellprobe {

namespace {

constexpr double kRelativeEigenResidual = 1e-12;
constexpr int kMaxInverseIterations = 100;

// LDL^T pivots of T - sigma I never vanish exactly; a zero pivot is replaced by
// a value far below any meaningful scale of the problem.
double safe_pivot(double d, double scale) {
  if (d == 0.0) return -DBL_EPSILON * scale;
  return d;
}

struct TwistedSolve {
  std::vector<double> z;
  double gamma = 0.0;
  std::size_t twist = 0;
};

// Solves (T - sigma) z = gamma e_r with r chosen to minimise |gamma|. Every
// component is a product of pivot ratios, so exponentially small tails keep
// full relative accuracy.
TwistedSolve twisted_solve(const TridiagonalOperator& op, double sigma) {
  const std::size_t n = op.diag.size();
  const double e = op.off;
  const double e2 = e * e;
  const double scale = op.norm_bound();

  std::vector<double> dplus(n), dminus(n);
  dplus[0] = safe_pivot(op.diag[0] - sigma, scale);
  for (std::size_t i = 1; i < n; ++i) dplus[i] = safe_pivot(op.diag[i] - sigma - e2 / dplus[i - 1], scale);
  dminus[n - 1] = safe_pivot(op.diag[n - 1] - sigma, scale);
  for (std::size_t i = n - 1; i-- > 0;) dminus[i] = safe_pivot(op.diag[i] - sigma - e2 / dminus[i + 1], scale);

  TwistedSolve out;
  double best = INFINITY;
  for (std::size_t r = 0; r < n; ++r) {
    const double gamma = dplus[r] + dminus[r] - (op.diag[r] - sigma);
    if (std::abs(gamma) < best) {
      best = std::abs(gamma);
      out.gamma = gamma;
      out.twist = r;
    }
  }
  out.z.assign(n, 0.0);
  const std::size_t r = out.twist;
  out.z[r] = 1.0;
  for (std::size_t i = r; i-- > 0;) out.z[i] = -(e / dplus[i]) * out.z[i + 1];
  for (std::size_t i = r + 1; i < n; ++i) out.z[i] = -(e / dminus[i]) * out.z[i - 1];
  return out;
}

long double rayleigh_quotient(const TridiagonalOperator& op, const std::vector<double>& z) {
  const std::size_t n = z.size();
  long double num = 0.0L, den = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    long double tz = static_cast<long double>(op.diag[i]) * z[i];
    if (i > 0) tz += static_cast<long double>(op.off) * z[i - 1];
    if (i + 1 < n) tz += static_cast<long double>(op.off) * z[i + 1];
    num += tz * z[i];
    den += static_cast<long double>(z[i]) * z[i];
  }
  return num / den;
}

long double residual_sum_squares(const TridiagonalOperator& op, const std::vector<double>& z, long double sigma) {
  const std::size_t n = z.size();
  long double sum = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    long double r = (static_cast<long double>(op.diag[i]) - sigma) * z[i];
    if (i > 0) r += static_cast<long double>(op.off) * z[i - 1];
    if (i + 1 < n) r += static_cast<long double>(op.off) * z[i + 1];
    sum += r * r;
  }
  return sum;
}

double sum_squares(const std::vector<double>& z) {
  long double s = 0.0L;
  for (double v : z) s += static_cast<long double>(v) * v;
  return static_cast<double>(s);
}

// Minimum of V + q_eps on a scan of [0, L] and its maximum.
std::pair<double, double> potential_range(const Potential& V, const Perturbation& q, double eps) {
  double lo = INFINITY, hi = -INFINITY;
  const double L = V.length();
  for (int i = 0; i < kValidationGridSize; ++i) {
    const double x = L * i / (kValidationGridSize - 1);
    const double v = V(x) + q(eps, x);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

}  // namespace

Grid::Grid(double L, int n_interior) : L_(L), n_(n_interior), h_(L / (n_interior + 1)) {
  if (!(L > 0.0)) fail(ErrorCode::DegenerateDomain, "grid needs a positive domain length");
  if (n_interior < 32) fail(ErrorCode::PreconditionViolated, "grid needs at least 32 interior nodes");
}

Grid auto_grid(double L, double energy_span, double eps) {
  if (!(eps > 0.0)) fail(ErrorCode::PreconditionViolated, "eps must be positive");
  const double n = std::ceil(20.0 * L * std::sqrt(std::max(energy_span, 0.0) + 1.0) / eps);
  if (n > kMaxGridNodes) {
    std::ostringstream msg;
    msg << "auto grid for eps=" << eps << " needs " << n << " nodes, above the cap of " << kMaxGridNodes;
    fail(ErrorCode::ConfigError, msg.str());
  }
  return Grid(L, std::max(32, static_cast<int>(n)));
}

double TridiagonalOperator::gershgorin_lower() const {
  double lo = INFINITY;
  for (std::size_t i = 0; i < diag.size(); ++i) {
    const double radius = (i > 0 ? std::abs(off) : 0.0) + (i + 1 < diag.size() ? std::abs(off) : 0.0);
    lo = std::min(lo, diag[i] - radius);
  }
  return lo;
}

double TridiagonalOperator::gershgorin_upper() const {
  double hi = -INFINITY;
  for (std::size_t i = 0; i < diag.size(); ++i) {
    const double radius = (i > 0 ? std::abs(off) : 0.0) + (i + 1 < diag.size() ? std::abs(off) : 0.0);
    hi = std::max(hi, diag[i] + radius);
  }
  return hi;
}

double TridiagonalOperator::norm_bound() const {
  if (norm > 0.0) return norm;
  return std::max(std::abs(gershgorin_lower()), std::abs(gershgorin_upper()));
}

double TridiagonalOperator::eigen_tolerance(double E) const {
  const double h = grid.spacing();
  return 1e-12 * (std::abs(E) + 4.0 * eps * eps / (h * h));
}

void TridiagonalOperator::apply(const std::vector<double>& v, std::vector<double>& out) const {
  const std::size_t n = diag.size();
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = diag[i] * v[i];
    if (i > 0) s += off * v[i - 1];
    if (i + 1 < n) s += off * v[i + 1];
    out[i] = s;
  }
}

TridiagonalOperator assemble(const Potential& potential, const Perturbation& q, double eps, const Grid& grid) {
  if (!(eps > 0.0)) fail(ErrorCode::PreconditionViolated, "eps must be positive");
  if (std::abs(grid.length() - potential.length()) > 1e-12 * potential.length()) {
    fail(ErrorCode::PreconditionViolated, "grid and potential domains differ");
  }
  const double h = grid.spacing();
  if (h > 0.5 * eps) {
    std::ostringstream msg;
    msg << "grid spacing h=" << h << " exceeds eps/2 for eps=" << eps;
    fail(ErrorCode::GridTooCoarse, msg.str());
  }

  TridiagonalOperator op;
  op.eps = eps;
  op.grid = grid;
  const int n = grid.n_interior();
  op.potential.resize(n);
  op.diag.resize(n);
  const double kinetic = eps * eps / (h * h);
  op.off = -kinetic;
  double vmin = INFINITY, vmax = -INFINITY;
  for (int i = 0; i < n; ++i) {
    const double x = grid.node(i + 1);
    const double v = potential(x) + q(eps, x);
    op.potential[i] = v;
    op.diag[i] = 2.0 * kinetic + v;
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  op.norm = std::max(std::abs(op.gershgorin_lower()), std::abs(op.gershgorin_upper()));
  const double resolved = eps / (10.0 * std::sqrt(vmax - vmin + 1.0));
  if (h > resolved) {
    std::ostringstream msg;
    msg << "grid spacing h=" << h << " above the resolution guide eps/(10 sqrt(range+1))=" << resolved;
    op.warning = msg.str();
  }
  return op;
}

int sturm_count(const TridiagonalOperator& op, double sigma) {
  const double e2 = op.off * op.off;
  const double scale = op.norm_bound();
  int count = 0;
  double d = safe_pivot(op.diag[0] - sigma, scale);
  if (d < 0.0) ++count;
  for (std::size_t i = 1; i < op.diag.size(); ++i) {
    d = safe_pivot(op.diag[i] - sigma - e2 / d, scale);
    if (d < 0.0) ++count;
  }
  return count;
}

double eigenvalue_by_index(const TridiagonalOperator& op, int k) {
  const int n = static_cast<int>(op.diag.size());
  if (k < 0 || k >= n) fail(ErrorCode::PreconditionViolated, "eigenvalue index out of range");
  double lo = op.gershgorin_lower();
  double hi = op.gershgorin_upper();
  const double floor_width = DBL_EPSILON * op.norm_bound();
  for (int it = 0; it < 256; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= std::max(floor_width, 2.0 * DBL_EPSILON * std::max(std::abs(lo), std::abs(hi))) ||
        mid <= lo || mid >= hi) {
      break;
    }
    if (sturm_count(op, mid) > k) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<double> eigenvalues_in_window(const TridiagonalOperator& op, double lo, double hi) {
  if (!(hi > lo)) fail(ErrorCode::PreconditionViolated, "eigenvalue window must satisfy lo < hi");
  const int first = sturm_count(op, lo);
  const int last = sturm_count(op, hi);
  if (last <= first) {
    std::ostringstream msg;
    msg << "no eigenvalue in [" << lo << ", " << hi << "]";
    fail(ErrorCode::WindowEmpty, msg.str());
  }
  std::vector<double> values;
  values.reserve(last - first);
  for (int k = first; k < last; ++k) values.push_back(eigenvalue_by_index(op, k));
  return values;
}

std::vector<double> lowest_eigenvalues(const TridiagonalOperator& op, int k) {
  if (k < 1) fail(ErrorCode::PreconditionViolated, "need k >= 1 eigenvalues");
  std::vector<double> values;
  values.reserve(k);
  for (int i = 0; i < k; ++i) values.push_back(eigenvalue_by_index(op, i));
  return values;
}

int nearest_index(const TridiagonalOperator& op, double E) {
  const int n = static_cast<int>(op.diag.size());
  const int below = sturm_count(op, E);
  if (below == 0) return 0;
  if (below >= n) return n - 1;
  const double lower = eigenvalue_by_index(op, below - 1);
  const double upper = eigenvalue_by_index(op, below);
  return (E - lower <= upper - E) ? below - 1 : below;
}

int Eigenpair::node_count() const {
  int nodes = 0;
  double last = 0.0;
  for (std::size_t i = 1; i + 1 < psi.size(); ++i) {
    if (psi[i] == 0.0) continue;
    if (last != 0.0 && (psi[i] < 0.0) != (last < 0.0)) ++nodes;
    last = psi[i];
  }
  return nodes;
}

Eigenpair eigenpair(const TridiagonalOperator& op, double E_approx) {
  const double tol = op.eigen_tolerance(E_approx);
  const int below = sturm_count(op, E_approx - 10.0 * tol);
  const int above = sturm_count(op, E_approx + 10.0 * tol);
  if (above - below > 1) {
    fail(ErrorCode::DegenerateCluster, "more than one eigenvalue within the shift ball");
  }
  if (above == below) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "shift " << E_approx << " is not within 10 tol_eig of an eigenvalue";
    fail(ErrorCode::PreconditionViolated, msg.str());
  }

  const double scale = op.norm_bound();
  long double sigma = E_approx;
  TwistedSolve solve;
  int it = 0;
  for (;; ++it) {
    if (it >= kMaxInverseIterations) {
      fail(ErrorCode::NoConvergence, "inverse iteration did not reach the residual target");
    }
    solve = twisted_solve(op, static_cast<double>(sigma));
    const long double rq = rayleigh_quotient(op, solve.z);
    // Keep the shift inside the certified ball so we cannot hop to a neighbour.
    if (std::abs(static_cast<double>(rq) - E_approx) <= 20.0 * tol) sigma = rq;
    const double res = std::sqrt(static_cast<double>(residual_sum_squares(op, solve.z, sigma)) / sum_squares(solve.z));
    if (res <= kRelativeEigenResidual * scale) break;
  }

  Eigenpair pair;
  pair.eps = op.eps;
  pair.E = static_cast<double>(sigma);
  pair.index = below;
  pair.iterations = it + 1;
  const Grid& grid = op.grid;
  const int n = grid.n_interior();
  pair.h = grid.spacing();
  pair.x.resize(n + 2);
  pair.psi.assign(n + 2, 0.0);
  for (int i = 0; i < n + 2; ++i) pair.x[i] = grid.node(i);

  // Trapezoid rule with zero end values reduces to h * sum.
  const double norm = std::sqrt(pair.h * sum_squares(solve.z));
  for (int i = 0; i < n; ++i) pair.psi[i + 1] = solve.z[i] / norm;

  double d0 = (4.0 * pair.psi[1] - pair.psi[2]) / (2.0 * pair.h);
  double sign = 1.0;
  if (d0 < 0.0) {
    sign = -1.0;
  } else if (d0 == 0.0) {
    for (double v : pair.psi) {
      if (v != 0.0) {
        sign = v > 0.0 ? 1.0 : -1.0;
        break;
      }
    }
  }
  if (sign < 0.0) {
    for (double& v : pair.psi) v = -v;
  }
  pair.dpsi0 = (4.0 * pair.psi[1] - pair.psi[2]) / (2.0 * pair.h);
  pair.dpsiL = (pair.psi[n - 1] - 4.0 * pair.psi[n]) / (2.0 * pair.h);
  pair.l2_norm = std::sqrt(pair.h * sum_squares(pair.psi));
  pair.residual_norm = residual(pair, op);
  return pair;
}

double residual(const Eigenpair& pair, const TridiagonalOperator& op) {
  const std::size_t n = op.diag.size();
  std::vector<double> interior(pair.psi.begin() + 1, pair.psi.begin() + 1 + static_cast<std::ptrdiff_t>(n));
  const long double ss = residual_sum_squares(op, interior, pair.E);
  return std::sqrt(static_cast<double>(ss) * pair.h);
}

double richardson_eigenvalue(const Potential& potential, const Perturbation& q, double eps, const Grid& grid,
                             int k) {
  const double coarse = eigenvalue_by_index(assemble(potential, q, eps, grid), k);
  const double fine = eigenvalue_by_index(assemble(potential, q, eps, grid.refined()), k);
  return (4.0 * fine - coarse) / 3.0;
}

namespace {

constexpr double kPhaseTolerance = 1e-9;  // global bound on theta(L) error

double phase_at_L(const Potential& V, const Perturbation& q, double eps, double E, double S, long* steps) {
  const double L = V.length();
  const auto Veps = [&](double x) { return V(x) + q(eps, x); };
  const auto rhs = [&](double v, double theta) {
    const double s = std::sin(theta), c = std::cos(theta);
    return (S * c * c + (E - v) / S * s * s) / eps;
  };

  double x = 0.0, theta = 0.0;
  double vx = Veps(0.0);
  double h = std::min(0.05 * eps, 0.01 * L);
  const double h_min = 1e-15 * L;
  long count = 0;
  while (x < L) {
    bool last = false;
    if (x + h >= L) {
      h = L - x;
      last = true;
    }
    const double v1 = Veps(x + 0.25 * h);
    const double v2 = Veps(x + 0.5 * h);
    const double v3 = Veps(x + 0.75 * h);
    const double v4 = Veps(x + h);

    // One RK4 step of size h.
    const double k1 = rhs(vx, theta);
    const double f2 = rhs(v2, theta + 0.5 * h * k1);
    const double f3 = rhs(v2, theta + 0.5 * h * f2);
    const double f4 = rhs(v4, theta + h * f3);
    const double full = theta + h / 6.0 * (k1 + 2.0 * f2 + 2.0 * f3 + f4);

    // Two RK4 steps of size h/2.
    const double hh = 0.5 * h;
    const double a2 = rhs(v1, theta + 0.5 * hh * k1);
    const double a3 = rhs(v1, theta + 0.5 * hh * a2);
    const double a4 = rhs(v2, theta + hh * a3);
    const double mid = theta + hh / 6.0 * (k1 + 2.0 * a2 + 2.0 * a3 + a4);
    const double b1 = rhs(v2, mid);
    const double b2 = rhs(v3, mid + 0.5 * hh * b1);
    const double b3 = rhs(v3, mid + 0.5 * hh * b2);
    const double b4 = rhs(v4, mid + hh * b3);
    const double two_half = mid + hh / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);

    const double err = std::abs(two_half - full) / 15.0;
    const double allowed = kPhaseTolerance * h / L;
    if (err <= allowed) {
      theta = two_half + (two_half - full) / 15.0;
      x = last ? L : x + h;
      vx = v4;
      ++count;
      if (last) break;
    }
    const double factor = err > 0.0 ? 0.9 * std::pow(allowed / err, 0.2) : 4.0;
    h *= std::clamp(factor, 0.1, 4.0);
    if (h < h_min) {
      std::ostringstream msg;
      msg << "Pruefer step size fell below 1e-15 L at x=" << x << " for E=" << E;
      fail(ErrorCode::PhaseOverflow, msg.str());
    }
  }
  if (steps) *steps += count;
  return theta;
}

double pruefer_scale(double E, double vmin, double eps) { return std::sqrt(std::max(E - vmin, 0.0) + eps); }

}  // namespace

double pruefer_phase(const Potential& potential, const Perturbation& q, double eps, double E, long* steps) {
  const auto [vmin, vmax] = potential_range(potential, q, eps);
  (void)vmax;
  return phase_at_L(potential, q, eps, E, pruefer_scale(E, vmin, eps), steps);
}

ShootingResult shooting_eigenvalue(const Potential& potential, const Perturbation& q, double eps, int k) {
  if (k < 0) fail(ErrorCode::PreconditionViolated, "mode index must be nonnegative");
  if (!(eps > 0.0)) fail(ErrorCode::PreconditionViolated, "eps must be positive");
  const double L = potential.length();
  const auto [vmin, vmax] = potential_range(potential, q, eps);
  const double target = (k + 1) * std::numbers::pi;

  ShootingResult out;
  // The scale is frozen per bracket so that theta(L; E) is one smooth function.
  double lo = vmin - 1e-3 * (1.0 + std::abs(vmin));
  const double free_energy = std::pow((k + 2) * std::numbers::pi * eps / L, 2);
  double hi = vmax + free_energy + 1e-3;
  const double S = pruefer_scale(hi, vmin, eps);
  auto f = [&](double E) { return phase_at_L(potential, q, eps, E, S, &out.steps) - target; };

  double flo = f(lo);
  double fhi = f(hi);
  for (int grow = 0; fhi <= 0.0; ++grow) {
    if (grow > 60) fail(ErrorCode::NoConvergence, "could not bracket the shooting eigenvalue");
    hi = vmax + 2.0 * (hi - vmax);
    fhi = f(hi);
  }
  if (flo >= 0.0) fail(ErrorCode::NoConvergence, "shooting lower bracket already exceeds the target phase");

  // Illinois regula falsi on the monotone phase map, with bisection safeguard.
  double E = 0.5 * (lo + hi);
  int side = 0;
  for (int it = 0; it < 300; ++it) {
    double candidate = (lo * fhi - hi * flo) / (fhi - flo);
    if (!(candidate > lo && candidate < hi)) candidate = 0.5 * (lo + hi);
    const double fc = f(candidate);
    const double previous = E;
    E = candidate;
    if (fc == 0.0) {
      lo = hi = E;
      break;
    }
    if (fc < 0.0) {
      lo = E;
      flo = fc;
      if (side == -1) fhi *= 0.5;
      side = -1;
    } else {
      hi = E;
      fhi = fc;
      if (side == 1) flo *= 0.5;
      side = 1;
    }
    const double scale = std::max(std::abs(E), 1e-4);
    if (hi - lo <= 1e-10 * scale || (it > 2 && std::abs(E - previous) <= 1e-11 * scale)) break;
  }
  out.E = E;
  out.theta_L = f(E) + target;
  const double below = E - std::max(1e-7 * std::abs(E), 1e-10);
  out.nodes = static_cast<int>(std::floor((f(below) + target) / std::numbers::pi));
  return out;
}

}  // namespace wellprobe
