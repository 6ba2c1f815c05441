#pragma once

#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "wellprobe/eigensolve.hpp"
#include "wellprobe/potential.hpp"

namespace wellprobe {

namespace tol {
inline constexpr double sing = 1e-9;
}

enum class Regime { Ground, Interior, HighEnergy };

std::string to_string(Regime regime);

inline constexpr double kInfiniteEnergy = std::numeric_limits<double>::infinity();

// Predicted weak-* limit of |psi|^2 dx at energy E_star.
struct MeasureSpec {
  Regime regime = Regime::Ground;
  double E_star = 0.0;  // +inf for HighEnergy
  double C_star = 0.0;  // interior normalisation, 0 otherwise
  double x0 = 0.0;
  double L = 0.0;
  TurningPoints turning;
  Potential potential{Expr(), 1.0};

  // Density on (x_-, x_+) for Interior, 1/L for HighEnergy. The ground regime
  // is an atom and has no density (PreconditionViolated).
  double density(double x) const;
};

// E_star within root_tolerance of E0 selects the ground regime, +inf the
// high-energy one. Throws EnergyBelowGround.
MeasureSpec limit_measure(const Well& well, double E_star);

struct TestFunction {
  std::string name;
  std::function<double(double)> f;
  double min_value = 0.0;  // bounds of f on [0, L]
  double max_value = 1.0;
};

// Smooth indicator of [a, b] with erf edges of the given width.
TestFunction smoothed_indicator(double a, double b, double width);

// {1, x, x^2, sin(pi x / L)} plus the smoothed indicators of each window.
std::vector<TestFunction> default_basket(double L, const std::vector<std::pair<double, double>>& windows,
                                         double indicator_width);

// Builds a basket from names: one, x, x2, sin, ind:a:b. Throws ConfigError.
std::vector<TestFunction> basket_from_names(double L, const std::vector<std::string>& names, double indicator_width);

double predicted_moment(const MeasureSpec& spec, const std::function<double(double)>& phi);

// Limits of |eps psi'(0)|^2 and |eps psi'(L)|^2 (interior), or of their
// E^{-1}-scaled versions (high energy). Throws GroundRegimeHasNoTraceLimit.
std::pair<double, double> predicted_boundary_traces(const MeasureSpec& spec);

struct RegimeTarget {
  Regime regime = Regime::Ground;
  double E_star = 0.0;        // Interior only
  double high_factor = 50.0;  // HighEnergy: track the level nearest high_factor * max V
  int grid_n = 0;             // fixed interior node count; 0 selects auto_grid
};

// Energy the regime tracks: E0, E_star, or E0 + high_factor (max V - E0).
double target_energy(const Well& well, const RegimeTarget& target);

// The grid regime_eigenpair solves on at this eps.
Grid regime_grid(const Well& well, const RegimeTarget& target, double eps);

struct MeasureSample {
  double eps = 0.0;
  double E = 0.0;
  int index = 0;
  int n_interior = 0;
  double residual = 0.0;
  std::vector<double> empirical;  // one per test function
  double trace0 = 0.0;            // |eps psi'(0)|^2, divided by E in the high regime
  double traceL = 0.0;
};

struct MeasureReport {
  RegimeTarget target;
  MeasureSpec spec;
  std::vector<std::string> phi_names;
  std::vector<double> predicted;  // one per test function
  bool has_trace_prediction = false;
  double trace0_predicted = 0.0;
  double traceL_predicted = 0.0;
  std::string note;
  std::vector<MeasureSample> samples;  // schedule order

  double moment_error(std::size_t sample, std::size_t phi) const;
};

// One eigenpair per schedule entry on the auto grid; samples are computed in
// parallel and stored in schedule order.
MeasureReport measure_convergence_report(const Well& well, const Perturbation& q, const RegimeTarget& target,
                                         const std::vector<double>& schedule,
                                         const std::vector<TestFunction>& basket);

// The eigenpair measure_convergence_report uses for one schedule entry.
Eigenpair regime_eigenpair(const Well& well, const Perturbation& q, const RegimeTarget& target, double eps,
                           TridiagonalOperator* op_out = nullptr);

// True unless some step along the last three entries grows the error by more
// than `slack`. Increases below `floor` count as round-off.
bool trend_ok(const std::vector<double>& errors, double slack = 1.5, double floor = 1e-9);

struct MeasureVerdict {
  bool pass = true;
  std::vector<std::string> failures;
};

// Moments: final absolute error <= moment_tol and trend_ok. Traces (when
// predicted): relative error <= trace_rel, or value <= trace_zero when the
// prediction is zero, and trend_ok.
MeasureVerdict verdict(const MeasureReport& report, double moment_tol = 0.02, double trace_rel = 0.05,
                       double trace_zero = 1e-4);

struct HusimiOptions {
  int nx = 161;
  int nxi = 161;
  double xi_max = 0.0;      // 0 selects sqrt(E - E0) + 6 sqrt(eps)
};

struct HusimiField {
  double eps = 0.0;
  double E = 0.0;
  double sigma = 0.0;  // coherent-state width sqrt(eps)
  std::vector<double> x;
  std::vector<double> xi;
  std::vector<double> values;  // H(x_j, xi_k) at j * xi.size() + k, renormalised to unit mass
  double raw_mass = 0.0;
  double cell_area = 0.0;

  double at(std::size_t j, std::size_t k) const { return values[j * xi.size() + k]; }
};

// H(x, xi) = |<psi, g_{x,xi}>|^2 / (2 pi eps) with g a Gaussian coherent state
// of width sqrt(eps), psi extended by zero outside [0, L]. Rows in parallel.
// Throws PhaseWindowTooSmall when xi_max^2 < E - E0 + 4 eps.
HusimiField husimi(const Eigenpair& pair, const Well& well, const HusimiOptions& options = {});

struct HusimiDiagnostics {
  double eta = 0.0;
  double tube_fraction = 0.0;      // mass with |xi^2 + V - E| <= eta
  double positive_fraction = 0.0;  // mass with xi > 0 (xi = 0 counted half)
  double marginal_l1 = 0.0;        // x-marginal vs |psi|^2 * Gaussian(variance eps / 2)
  double marginal_l1_raw = 0.0;    // x-marginal vs |psi|^2
};

HusimiDiagnostics husimi_diagnostics(const HusimiField& field, const Eigenpair& pair, const Well& well,
                                     double tube_const = 5.0);

}  // namespace wellprobe
