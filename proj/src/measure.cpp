#include "wellprobe/measure.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "wellprobe/error.hpp"
#include "wellprobe/parallel.hpp"
#include "wellprobe/quadrature.hpp"

namespace wellprobe {

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::Ground: return "ground";
    case Regime::Interior: return "interior";
    case Regime::HighEnergy: return "high";
  }
  return "unknown";
}

double MeasureSpec::density(double x) const {
  switch (regime) {
    case Regime::HighEnergy: return (x >= 0.0 && x <= L) ? 1.0 / L : 0.0;
    case Regime::Interior: {
      if (x <= turning.x_minus || x >= turning.x_plus) return 0.0;
      const double gap = E_star - potential(x);
      return gap > 0.0 ? C_star / std::sqrt(gap) : 0.0;
    }
    case Regime::Ground: break;
  }
  fail(ErrorCode::PreconditionViolated, "the ground-regime limit is an atom at x0 and has no density");
}

MeasureSpec limit_measure(const Well& well, double E_star) {
  MeasureSpec spec;
  spec.E_star = E_star;
  spec.x0 = well.x0();
  spec.L = well.length();
  spec.potential = well.potential();
  if (std::isinf(E_star) && E_star > 0.0) {
    spec.regime = Regime::HighEnergy;
    spec.turning = TurningPoints{0.0, spec.L, E_star};
    return spec;
  }
  if (std::isnan(E_star)) fail(ErrorCode::PreconditionViolated, "E_star is NaN");
  const double E0 = well.E0();
  if (E_star < E0 - root_tolerance(E0)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "E_star=" << E_star << " lies below the ground energy E0=" << E0;
    fail(ErrorCode::EnergyBelowGround, msg.str());
  }
  if (E_star <= E0 + root_tolerance(E0)) {
    spec.regime = Regime::Ground;
    spec.turning = TurningPoints{spec.x0, spec.x0, E0};
    return spec;
  }
  spec.regime = Regime::Interior;
  spec.turning = turning_points(well, E_star);
  const Potential& V = spec.potential;
  const double total = quad::inverse_sqrt_weighted([](double) { return 1.0; },
                                                   [&](double x) { return E_star - V(x); }, spec.turning.x_minus,
                                                   spec.turning.x_plus, tol::sing);
  spec.C_star = 1.0 / total;
  return spec;
}

TestFunction smoothed_indicator(double a, double b, double width) {
  std::ostringstream name;
  name << "ind:" << a << ":" << b;
  return TestFunction{name.str(),
                      [a, b, width](double x) { return 0.5 * (std::erf((x - a) / width) - std::erf((x - b) / width)); },
                      0.0, 1.0};
}

std::vector<TestFunction> default_basket(double L, const std::vector<std::pair<double, double>>& windows,
                                         double indicator_width) {
  std::vector<TestFunction> basket{
      {"one", [](double) { return 1.0; }, 1.0, 1.0},
      {"x", [](double x) { return x; }, 0.0, L},
      {"x2", [](double x) { return x * x; }, 0.0, L * L},
      {"sin", [L](double x) { return std::sin(std::numbers::pi * x / L); }, 0.0, 1.0},
  };
  for (const auto& [a, b] : windows) basket.push_back(smoothed_indicator(a, b, indicator_width));
  return basket;
}

std::vector<TestFunction> basket_from_names(double L, const std::vector<std::string>& names, double indicator_width) {
  const std::vector<TestFunction> standard = default_basket(L, {}, indicator_width);
  std::vector<TestFunction> basket;
  for (const std::string& name : names) {
    auto it = std::find_if(standard.begin(), standard.end(), [&](const TestFunction& t) { return t.name == name; });
    if (it != standard.end()) {
      basket.push_back(*it);
      continue;
    }
    double a = 0.0, b = 0.0;
    char c1 = 0, c2 = 0;
    std::istringstream in(name.substr(name.rfind("ind", 0) == 0 ? 3 : 0));
    if (name.rfind("ind", 0) == 0 && (in >> c1 >> a >> c2 >> b) && c1 == ':' && c2 == ':' && in.peek() == EOF &&
        a < b) {
      basket.push_back(smoothed_indicator(a, b, indicator_width));
      continue;
    }
    fail(ErrorCode::ConfigError, "unknown test function '" + name + "' (expected one, x, x2, sin or ind:a:b)");
  }
  return basket;
}

double predicted_moment(const MeasureSpec& spec, const std::function<double(double)>& phi) {
  switch (spec.regime) {
    case Regime::Ground: return phi(spec.x0);
    case Regime::HighEnergy: return quad::adaptive(phi, 0.0, spec.L, tol::sing) / spec.L;
    case Regime::Interior: break;
  }
  const Potential& V = spec.potential;
  const double E = spec.E_star;
  return spec.C_star * quad::inverse_sqrt_weighted(phi, [&](double x) { return E - V(x); }, spec.turning.x_minus,
                                                   spec.turning.x_plus, tol::sing / spec.C_star);
}

std::pair<double, double> predicted_boundary_traces(const MeasureSpec& spec) {
  switch (spec.regime) {
    case Regime::Ground:
      fail(ErrorCode::GroundRegimeHasNoTraceLimit, "no boundary-trace limit is predicted at E_star = E0");
    case Regime::HighEnergy: return {2.0 / spec.L, 2.0 / spec.L};
    case Regime::Interior: break;
  }
  auto side = [&](double x) {
    const double gap = spec.E_star - spec.potential(x);
    return gap > 0.0 ? 2.0 * spec.C_star * std::sqrt(gap) : 0.0;
  };
  return {side(0.0), side(spec.L)};
}

double MeasureReport::moment_error(std::size_t sample, std::size_t phi) const {
  return std::abs(samples[sample].empirical[phi] - predicted[phi]);
}

double target_energy(const Well& well, const RegimeTarget& target) {
  switch (target.regime) {
    case Regime::Ground: return well.E0();
    case Regime::Interior: return target.E_star;
    case Regime::HighEnergy: return well.E0() + target.high_factor * (well.v_max() - well.E0());
  }
  return well.E0();
}

Grid regime_grid(const Well& well, const RegimeTarget& target, double eps) {
  if (target.grid_n > 0) return Grid(well.length(), target.grid_n);
  const double span = std::max(well.v_max(), target_energy(well, target)) - well.E0();
  return auto_grid(well.length(), span, eps);
}

Eigenpair regime_eigenpair(const Well& well, const Perturbation& q, const RegimeTarget& target, double eps,
                           TridiagonalOperator* op_out) {
  const double E_target = target_energy(well, target);
  TridiagonalOperator op = assemble(well.potential(), q, eps, regime_grid(well, target, eps));
  const int k = target.regime == Regime::Ground ? 0 : nearest_index(op, E_target);
  Eigenpair pair = eigenpair(op, eigenvalue_by_index(op, k));
  if (op_out) *op_out = std::move(op);
  return pair;
}

MeasureReport measure_convergence_report(const Well& well, const Perturbation& q, const RegimeTarget& target,
                                         const std::vector<double>& schedule,
                                         const std::vector<TestFunction>& basket) {
  for (std::size_t i = 1; i < schedule.size(); ++i) {
    if (!(schedule[i] < schedule[i - 1])) fail(ErrorCode::PreconditionViolated, "schedule must strictly decrease");
  }
  MeasureReport report;
  report.target = target;
  const double E_star = target.regime == Regime::Ground     ? well.E0()
                        : target.regime == Regime::Interior ? target.E_star
                                                            : kInfiniteEnergy;
  report.spec = limit_measure(well, E_star);
  for (const TestFunction& t : basket) {
    report.phi_names.push_back(t.name);
    report.predicted.push_back(predicted_moment(report.spec, t.f));
  }
  try {
    std::tie(report.trace0_predicted, report.traceL_predicted) = predicted_boundary_traces(report.spec);
    report.has_trace_prediction = true;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::GroundRegimeHasNoTraceLimit) throw;
    report.note = "ground regime: no boundary-trace limit predicted, traces reported as measured";
  }

  report.samples.resize(schedule.size());
  parallel_for(schedule.size(), [&](std::size_t s) {
    const double eps = schedule[s];
    const Eigenpair pair = regime_eigenpair(well, q, target, eps);
    MeasureSample& sample = report.samples[s];
    sample.eps = eps;
    sample.E = pair.E;
    sample.index = pair.index;
    sample.n_interior = static_cast<int>(pair.psi.size()) - 2;
    sample.residual = pair.residual_norm;
    for (const TestFunction& t : basket) {
      double sum = 0.0;
      for (std::size_t i = 1; i + 1 < pair.psi.size(); ++i) sum += t.f(pair.x[i]) * pair.psi[i] * pair.psi[i];
      sample.empirical.push_back(sum * pair.h);
    }
    const double scale = target.regime == Regime::HighEnergy ? 1.0 / pair.E : 1.0;
    sample.trace0 = std::pow(eps * pair.dpsi0, 2) * scale;
    sample.traceL = std::pow(eps * pair.dpsiL, 2) * scale;
  });
  return report;
}

bool trend_ok(const std::vector<double>& errors, double slack, double floor) {
  const std::size_t n = errors.size();
  for (std::size_t i = n >= 3 ? n - 2 : 1; i < n; ++i) {
    if (errors[i] > std::max(slack * errors[i - 1], floor)) return false;
  }
  return true;
}

MeasureVerdict verdict(const MeasureReport& report, double moment_tol, double trace_rel, double trace_zero) {
  MeasureVerdict out;
  if (report.samples.empty()) return out;
  auto flag = [&](const std::string& what) {
    out.pass = false;
    out.failures.push_back(what);
  };
  for (std::size_t p = 0; p < report.phi_names.size(); ++p) {
    std::vector<double> errors;
    for (std::size_t s = 0; s < report.samples.size(); ++s) errors.push_back(report.moment_error(s, p));
    if (errors.back() > moment_tol) flag("moment " + report.phi_names[p] + ": final error above tolerance");
    if (!trend_ok(errors)) flag("moment " + report.phi_names[p] + ": error grows along the schedule");
  }
  if (!report.has_trace_prediction) return out;
  auto check_trace = [&](const char* side, double predicted, auto member) {
    std::vector<double> errors;
    for (const MeasureSample& s : report.samples) {
      const double value = s.*member;
      errors.push_back(predicted > 0.0 ? std::abs(value - predicted) / predicted : value);
    }
    const double limit = predicted > 0.0 ? trace_rel : trace_zero;
    if (errors.back() > limit) flag(std::string("trace at ") + side + ": final value off the predicted limit");
    if (!trend_ok(errors)) flag(std::string("trace at ") + side + ": error grows along the schedule");
  };
  check_trace("0", report.trace0_predicted, &MeasureSample::trace0);
  check_trace("L", report.traceL_predicted, &MeasureSample::traceL);
  return out;
}

HusimiField husimi(const Eigenpair& pair, const Well& well, const HusimiOptions& options) {
  if (options.nx < 2 || options.nxi < 2) fail(ErrorCode::PreconditionViolated, "Husimi grid needs >= 2 points per axis");
  const double eps = pair.eps;
  const double E = pair.E;
  const double need = E - well.E0() + 4.0 * eps;
  const double xi_max =
      options.xi_max > 0.0 ? options.xi_max : std::sqrt(std::max(E - well.E0(), 0.0)) + 6.0 * std::sqrt(eps);
  if (xi_max * xi_max < need) {
    std::ostringstream msg;
    msg << "xi_max=" << xi_max << " but xi_max^2 must be >= E - E0 + 4 eps = " << need;
    fail(ErrorCode::PhaseWindowTooSmall, msg.str());
  }

  HusimiField field;
  field.eps = eps;
  field.E = E;
  field.sigma = std::sqrt(eps);
  const double L = well.length();
  for (int j = 0; j < options.nx; ++j) field.x.push_back(L * j / (options.nx - 1));
  for (int k = 0; k < options.nxi; ++k) field.xi.push_back(-xi_max + 2.0 * xi_max * k / (options.nxi - 1));
  const std::size_t nx = field.x.size(), nxi = field.xi.size();
  field.values.assign(nx * nxi, 0.0);

  const double h = pair.h;
  const double norm = std::pow(std::numbers::pi * eps, -0.25);
  const double reach = std::sqrt(80.0 * eps);  // Gaussian factor below e^-40 beyond
  const std::size_t last = pair.psi.size() - 1;

  parallel_for(nx, [&](std::size_t j) {
    const double xc = field.x[j];
    const std::size_t lo = static_cast<std::size_t>(std::max(1.0, std::floor((xc - reach) / h)));
    const std::size_t hi = std::min(last - 1, static_cast<std::size_t>(std::max(0.0, std::ceil((xc + reach) / h))));
    if (hi < lo) return;
    std::vector<double> w(hi - lo + 1);
    for (std::size_t i = lo; i <= hi; ++i) {
      const double d = pair.x[i] - xc;
      w[i - lo] = h * norm * pair.psi[i] * std::exp(-d * d / (2.0 * eps));
    }
    for (std::size_t k = 0; k < nxi; ++k) {
      const double rate = field.xi[k] / eps;
      const std::complex<double> step = std::polar(1.0, -rate * h);
      std::complex<double> phasor;
      std::complex<double> sum = 0.0;
      for (std::size_t i = lo; i <= hi; ++i) {
        // Re-anchor the recurrence periodically to keep the phase exact.
        if ((i - lo) % 512 == 0) phasor = std::polar(1.0, -rate * pair.x[i]);
        sum += w[i - lo] * phasor;
        phasor *= step;
      }
      field.values[j * nxi + k] = std::norm(sum) / (2.0 * std::numbers::pi * eps);
    }
  });

  field.cell_area = (field.x[1] - field.x[0]) * (field.xi[1] - field.xi[0]);
  double total = 0.0;
  for (double v : field.values) total += v;
  field.raw_mass = total * field.cell_area;
  if (field.raw_mass > 0.0) {
    for (double& v : field.values) v /= field.raw_mass;
  }
  return field;
}

HusimiDiagnostics husimi_diagnostics(const HusimiField& field, const Eigenpair& pair, const Well& well,
                                     double tube_const) {
  HusimiDiagnostics out;
  const double E = field.E;
  const double eps = field.eps;
  out.eta = tube_const * std::sqrt(eps) * (1.0 + std::abs(E));
  const std::size_t nx = field.x.size(), nxi = field.xi.size();
  const double dx = field.x[1] - field.x[0];
  const double dxi = field.xi[1] - field.xi[0];

  double total = 0.0, tube = 0.0, positive = 0.0;
  std::vector<double> marginal(nx, 0.0);
  for (std::size_t j = 0; j < nx; ++j) {
    const double v = well(field.x[j]);
    for (std::size_t k = 0; k < nxi; ++k) {
      const double m = field.at(j, k);
      const double xi = field.xi[k];
      total += m;
      if (std::abs(xi * xi + v - E) <= out.eta) tube += m;
      if (xi > 0.0) positive += m;
      if (xi == 0.0) positive += 0.5 * m;
      marginal[j] += m * dxi;
    }
  }
  out.tube_fraction = tube / total;
  out.positive_fraction = positive / total;

  const double h = pair.h;
  const double gauss_norm = 1.0 / std::sqrt(std::numbers::pi * eps);
  const double reach = std::sqrt(80.0 * eps);
  double l1 = 0.0, l1_raw = 0.0;
  for (std::size_t j = 0; j < nx; ++j) {
    const double xc = field.x[j];
    double smooth = 0.0;
    for (std::size_t i = 1; i + 1 < pair.psi.size(); ++i) {
      const double d = pair.x[i] - xc;
      if (std::abs(d) > reach) continue;
      smooth += h * pair.psi[i] * pair.psi[i] * gauss_norm * std::exp(-d * d / eps);
    }
    // |psi|^2 at xc by linear interpolation on the eigen-grid.
    const std::size_t i = std::min(pair.psi.size() - 2, static_cast<std::size_t>(xc / h));
    const double t = std::clamp((xc - pair.x[i]) / (pair.x[i + 1] - pair.x[i]), 0.0, 1.0);
    const double psi = (1.0 - t) * pair.psi[i] + t * pair.psi[i + 1];
    const double weight = (j == 0 || j + 1 == nx) ? 0.5 * dx : dx;
    l1 += weight * std::abs(marginal[j] - smooth);
    l1_raw += weight * std::abs(marginal[j] - psi * psi);
  }
  out.marginal_l1 = l1;
  out.marginal_l1_raw = l1_raw;
  return out;
}

}  // namespace wellprobe
