#include "wellprobe/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "wellprobe/error.hpp"

namespace wellprobe {

namespace {

void require_domain(double L) {
  if (!(L > 0.0) || !std::isfinite(L)) {
    fail(ErrorCode::DegenerateDomain, "domain length must be positive, got L=" + std::to_string(L));
  }
}

// Golden-section search for the minimiser of f on [a, b].
template <class F>
double golden_section(F&& f, double a, double b, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Bisection on a sign-changing g over [lo, hi] down to floating-point resolution.
template <class G>
double bisect_root(G&& g, double lo, double hi) {
  double glo = g(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double gm = g(mid);
    if (gm == 0.0) return mid;
    if ((gm < 0.0) == (glo < 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

Potential::Potential(Expr V, double L) : V_(std::move(V)), dV_(V_.derivative()), L_(L) {
  require_domain(L);
  if (V_.depends_on_eps()) {
    fail(ErrorCode::ParseError, "potential V must not depend on eps; put eps terms in the perturbation q");
  }
}

Perturbation::Perturbation(Expr q) : q_(std::move(q)), dq_(q_.derivative()), zero_(false) {
  if (q_.is_constant() && q_(0.0, 0.0) == 0.0) zero_ = true;
}

double Perturbation::sup_norm_bound(double eps, double L) const {
  if (zero_) return 0.0;
  double sup = 0.0;
  for (int i = 0; i < kValidationGridSize; ++i) {
    const double x = L * i / (kValidationGridSize - 1);
    sup = std::max(sup, std::abs(q_(x, eps)));
  }
  return sup;
}

double Perturbation::c1_norm_bound(double eps, double L) const {
  if (zero_) return 0.0;
  double sup = 0.0;
  for (int i = 0; i < kValidationGridSize; ++i) {
    const double x = L * i / (kValidationGridSize - 1);
    sup = std::max({sup, std::abs(q_(x, eps)), std::abs(dq_(x, eps))});
  }
  return sup;
}

bool Perturbation::vanishes_along(std::span<const double> schedule, double L) const {
  if (zero_ || schedule.empty()) return true;
  const auto [lo, hi] = std::minmax_element(schedule.begin(), schedule.end());
  const double at_small = sup_norm_bound(*lo, L);
  const double at_large = sup_norm_bound(*hi, L);
  if (at_small == 0.0) return true;
  return *lo < *hi && at_small < at_large;
}

WellCertificate validate_single_well(const Potential& potential, int grid_size) {
  const double L = potential.length();
  require_domain(L);
  if (grid_size < 16) {
    fail(ErrorCode::PreconditionViolated, "validation grid needs at least 16 points");
  }

  std::vector<double> xs(grid_size), vs(grid_size);
  std::size_t imin = 0;
  for (int i = 0; i < grid_size; ++i) {
    xs[i] = L * i / (grid_size - 1);
    vs[i] = potential(xs[i]);
    if (!std::isfinite(vs[i])) {
      fail(ErrorCode::NotSingleWell, "V is not finite at x=" + std::to_string(xs[i]));
    }
    if (vs[i] < vs[imin]) imin = i;
  }
  if (imin == 0 || imin + 1 == xs.size()) {
    fail(ErrorCode::NotSingleWell, "minimum of V lies on the boundary (x=" + std::to_string(xs[imin]) + ")");
  }

  const double a = xs[imin - 1], b = xs[imin + 1];
  double x0 = golden_section(potential, a, b, tol::min);
  // Polish with the sign of V' when it brackets; golden section alone stalls at
  // sqrt(machine eps) because V is flat at its minimum.
  if (potential.derivative(a) < 0.0 && potential.derivative(b) > 0.0) {
    x0 = bisect_root([&](double x) { return potential.derivative(x); }, a, b);
  }

  WellCertificate cert;
  cert.x0 = x0;
  cert.E0 = potential(x0);
  cert.v_at_0 = vs.front();
  cert.v_at_L = vs.back();
  cert.v_max = *std::max_element(vs.begin(), vs.end());
  cert.grid_size = grid_size;

  std::ostringstream report;
  for (int i = 0; i < grid_size; ++i) {
    const double x = xs[i];
    const double dv = potential.derivative(x);
    const bool bad = (x < x0 && dv > tol::sign) || (x > x0 && dv < -tol::sign) || !std::isfinite(dv);
    if (bad) {
      if (cert.sign_violations < 5) report << "V'(" << x << ")=" << dv << "; ";
      ++cert.sign_violations;
    }
  }
  if (cert.sign_violations > 0) {
    fail(ErrorCode::NotSingleWell, "sign pattern of V' violated at " + std::to_string(cert.sign_violations) +
                                       " grid points: " + report.str());
  }
  if (cert.E0 > cert.v_at_0 || cert.E0 > cert.v_at_L || cert.E0 > vs[imin] + tol::min) {
    fail(ErrorCode::NotSingleWell, "refined minimum exceeds sampled values");
  }
  report << "x0=" << x0 << " E0=" << cert.E0 << " maxV=" << cert.v_max << " monotone on both sides";
  cert.report = report.str();
  return cert;
}

Well::Well(Potential potential, int grid_size)
    : potential_(std::move(potential)), cert_(validate_single_well(potential_, grid_size)) {}

double root_tolerance(double E) noexcept { return tol::root_rel * std::max(1.0, std::abs(E)); }

TurningPoints turning_points(const Well& well, double E) {
  const double tol = root_tolerance(E);
  if (E < well.E0() - tol) {
    fail(ErrorCode::EnergyBelowGround,
         "E=" + std::to_string(E) + " lies below the ground energy E0=" + std::to_string(well.E0()));
  }
  TurningPoints tp{well.x0(), well.x0(), E};
  if (E <= well.E0()) return tp;

  const auto g = [&](double x) { return well(x) - E; };
  const double L = well.length();
  if (E >= well.certificate().v_at_0) {
    tp.x_minus = 0.0;
  } else {
    tp.x_minus = bisect_root(g, 0.0, well.x0());
  }
  if (E >= well.certificate().v_at_L) {
    tp.x_plus = L;
  } else {
    tp.x_plus = bisect_root(g, well.x0(), L);
  }
  return tp;
}

}  // namespace wellprobe
