#pragma once

#include <span>
#include <string>

#include "wellprobe/expression.hpp"

namespace wellprobe {

namespace tol {
// |V(x_pm) - E| bound for turning points, scaled by max(1, |E|).
inline constexpr double root_rel = 1e-12;
inline constexpr double min = 1e-10;
inline constexpr double sign = 1e-10;
}  // namespace tol

inline constexpr int kValidationGridSize = 4096;

// V on [0, L] with its symbolic derivative. No shape assumption; see Well.
class Potential {
 public:
  Potential(Expr V, double L);

  static Potential parse(std::string_view V_text, double L) { return Potential(Expr::parse(V_text), L); }

  double length() const noexcept { return L_; }
  double operator()(double x) const { return V_(x); }
  double derivative(double x) const { return dV_(x); }
  const Expr& expression() const noexcept { return V_; }

 private:
  Expr V_;
  Expr dV_;
  double L_;
};

// q_eps(x), a perturbation vanishing with eps. Default constructed is q = 0.
class Perturbation {
 public:
  Perturbation() = default;
  explicit Perturbation(Expr q);

  static Perturbation parse(std::string_view text) { return Perturbation(Expr::parse(text)); }

  bool is_zero() const noexcept { return zero_; }
  double operator()(double eps, double x) const { return zero_ ? 0.0 : q_(x, eps); }
  double derivative(double eps, double x) const { return zero_ ? 0.0 : dq_(x, eps); }

  // Sampled on kValidationGridSize points of [0, L].
  double sup_norm_bound(double eps, double L) const;
  double c1_norm_bound(double eps, double L) const;

  // sup-norm at the smallest eps strictly below the one at the largest eps
  // (or both zero).
  bool vanishes_along(std::span<const double> schedule, double L) const;

  std::string to_string() const { return zero_ ? "0" : q_.to_string(); }

 private:
  Expr q_;
  Expr dq_;
  bool zero_ = true;
};

struct WellCertificate {
  double x0 = 0.0;
  double E0 = 0.0;
  double v_max = 0.0;  // max V on the validation grid
  double v_at_0 = 0.0;
  double v_at_L = 0.0;
  int grid_size = 0;
  int sign_violations = 0;
  std::string report;
};

// Throws NotSingleWell or DegenerateDomain.
WellCertificate validate_single_well(const Potential& potential, int grid_size = kValidationGridSize);

// A potential certified to have a single interior well.
class Well {
 public:
  explicit Well(Potential potential, int grid_size = kValidationGridSize);

  const Potential& potential() const noexcept { return potential_; }
  const WellCertificate& certificate() const noexcept { return cert_; }

  double length() const noexcept { return potential_.length(); }
  double operator()(double x) const { return potential_(x); }
  double derivative(double x) const { return potential_.derivative(x); }
  double x0() const noexcept { return cert_.x0; }
  double E0() const noexcept { return cert_.E0; }
  double v_max() const noexcept { return cert_.v_max; }

 private:
  Potential potential_;
  WellCertificate cert_;
};

struct TurningPoints {
  double x_minus = 0.0;
  double x_plus = 0.0;
  double energy = 0.0;

  bool contains(double x) const noexcept { return x >= x_minus && x <= x_plus; }
};

// K_E = [x_minus, x_plus], clamped to 0 / L once E reaches V(0) / V(L).
// Throws EnergyBelowGround for E < E0 - tol.
TurningPoints turning_points(const Well& well, double E);

double root_tolerance(double E) noexcept;

}  // namespace wellprobe
