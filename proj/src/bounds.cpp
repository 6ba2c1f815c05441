#include "wellprobe/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "wellprobe/error.hpp"
#include "wellprobe/parallel.hpp"
#include "wellprobe/quadrature.hpp"

namespace wellprobe {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// log(sum_i exp(terms_i)), ignoring -inf entries.
double log_sum(const std::vector<double>& terms) {
  double m = kNegInf;
  for (double t : terms) m = std::max(m, t);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double t : terms) {
    if (t != kNegInf) s += std::exp(t - m);
  }
  return m + std::log(s);
}

double log_abs(double v) { return v == 0.0 ? kNegInf : std::log(std::abs(v)); }

double sup_abs_derivative(const Well& well) {
  const double L = well.length();
  double best = 0.0;
  for (int i = 0; i < kValidationGridSize; ++i) {
    best = std::max(best, std::abs(well.derivative(L * i / (kValidationGridSize - 1))));
  }
  return best;
}

// log of |psi|_{L^2([a, b])} by the trapezoid rule on the nodes inside [a, b]
// plus linearly interpolated end values.
double log_window_norm(const Eigenpair& pair, double a, double b) {
  const double L = pair.x.back();
  if (!(a >= -1e-14 * L && b <= L * (1 + 1e-14) && a < b)) {
    std::ostringstream msg;
    msg << "observation window [" << a << ", " << b << "] must satisfy 0 <= a < b <= L";
    fail(ErrorCode::EmptyObservationWindow, msg.str());
  }
  a = std::max(a, 0.0);
  b = std::min(b, L);
  auto interpolate = [&](double x) {
    const std::size_t i = std::min(pair.x.size() - 2, static_cast<std::size_t>(x / pair.h));
    const double t = std::clamp((x - pair.x[i]) / (pair.x[i + 1] - pair.x[i]), 0.0, 1.0);
    return (1.0 - t) * pair.psi[i] + t * pair.psi[i + 1];
  };
  std::vector<double> xs{a}, ps{interpolate(a)};
  for (std::size_t i = 0; i < pair.x.size(); ++i) {
    if (pair.x[i] > a && pair.x[i] < b) {
      xs.push_back(pair.x[i]);
      ps.push_back(pair.psi[i]);
    }
  }
  xs.push_back(b);
  ps.push_back(interpolate(b));
  std::vector<double> terms;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const double half = std::log(0.5 * (xs[i] - xs[i - 1]));
    terms.push_back(half + 2.0 * log_abs(ps[i - 1]));
    terms.push_back(half + 2.0 * log_abs(ps[i]));
  }
  return 0.5 * log_sum(terms);
}

// Range maximum over node indices.
class SparseMax {
 public:
  explicit SparseMax(std::vector<double> values) {
    table_.push_back(std::move(values));
    const std::size_t n = table_[0].size();
    for (std::size_t w = 1; (std::size_t{2} << (w - 1)) <= n; ++w) {
      const std::vector<double>& prev = table_.back();
      const std::size_t half = std::size_t{1} << (w - 1);
      std::vector<double> row(n - (std::size_t{1} << w) + 1);
      for (std::size_t i = 0; i < row.size(); ++i) row[i] = std::max(prev[i], prev[i + half]);
      table_.push_back(std::move(row));
    }
  }
  double max(std::size_t lo, std::size_t hi) const {  // inclusive
    std::size_t w = 0;
    while ((std::size_t{2} << w) <= hi - lo + 1) ++w;
    return std::max(table_[w][lo], table_[w][hi + 1 - (std::size_t{1} << w)]);
  }

 private:
  std::vector<std::vector<double>> table_;
};

// Pair scan over `nodes`: margin(i, j) for i < j (x = y only gives 0 <= rhs),
// parallel over the outer index, reduced in index order.
template <typename Margin>
InequalityCheck scan_pairs(const std::vector<std::size_t>& nodes, const std::vector<double>& x, Margin margin) {
  struct Best {
    double margin = std::numeric_limits<double>::infinity();
    std::size_t i = 0, j = 0;
    long pairs = 0;
  };
  std::vector<Best> rows(nodes.size());
  parallel_for(nodes.size(), [&](std::size_t a) {
    Best best;
    for (std::size_t b = a + 1; b < nodes.size(); ++b) {
      const double m = margin(nodes[a], nodes[b]);
      ++best.pairs;
      if (m < best.margin) best = Best{m, nodes[a], nodes[b], best.pairs};
    }
    rows[a] = best;
  });
  InequalityCheck out;
  out.worst_margin = std::numeric_limits<double>::infinity();
  for (const Best& r : rows) {
    out.pairs += r.pairs;
    if (r.margin < out.worst_margin) {
      out.worst_margin = r.margin;
      out.worst_x = x[r.i];
      out.worst_y = x[r.j];
    }
  }
  out.pass = out.worst_margin >= -tol::exp;
  return out;
}

// Five-point stencils, skewed near the ends, so that the derivative error is
// O(h^4) and of one smooth form across the whole grid.
std::vector<double> fourth_order_derivative(const std::vector<double>& f, double h) {
  const std::size_t n = f.size();
  std::vector<double> d(n);
  const double s = 1.0 / (12.0 * h);
  d[0] = s * (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]);
  d[1] = s * (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]);
  for (std::size_t i = 2; i + 2 < n; ++i) d[i] = s * (f[i - 2] - 8 * f[i - 1] + 8 * f[i + 1] - f[i + 2]);
  d[n - 2] = -s * (-3 * f[n - 1] - 10 * f[n - 2] + 18 * f[n - 3] - 6 * f[n - 4] + f[n - 5]);
  d[n - 1] = -s * (-25 * f[n - 1] + 48 * f[n - 2] - 36 * f[n - 3] + 16 * f[n - 4] - 3 * f[n - 5]);
  return d;
}

}  // namespace

EnergyDensities energy_densities(const Eigenpair& pair, const Well& well) {
  EnergyDensities d;
  d.eps = pair.eps;
  d.E = pair.E;
  d.x = pair.x;
  const std::size_t n = pair.psi.size();
  d.dpsi = fourth_order_derivative(pair.psi, pair.h);

  d.script_E.resize(n);
  d.script_E_plus.resize(n);
  d.log_script_E.resize(n);
  d.log_script_E_plus.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double psi = pair.psi[i];
    const double kinetic = pair.eps * d.dpsi[i];
    const double gap = well(d.x[i]) - pair.E;
    d.script_E[i] = kinetic * kinetic + psi * psi;
    d.script_E_plus[i] = kinetic * kinetic + gap * psi * psi;
    const double log_kinetic = 2.0 * log_abs(kinetic);
    const double log_psi = 2.0 * log_abs(psi);
    d.log_script_E[i] = log_add(log_kinetic, log_psi);
    if (gap >= 0.0) {
      d.log_script_E_plus[i] = log_add(log_kinetic, gap > 0.0 ? std::log(gap) + log_psi : kNegInf);
    } else if (d.script_E_plus[i] > 0.0) {
      d.log_script_E_plus[i] = std::log(d.script_E_plus[i]);
    } else {
      d.log_script_E_plus[i] = d.script_E_plus[i] == 0.0 ? kNegInf : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return d;
}

AgmonProfile profile_for(const Eigenpair& pair, const Well& well) { return agmon_profile(well, pair.E, pair.x); }

UpperBound agmon_upper_report(const Eigenpair& pair, const Well& well, const AgmonProfile& profile) {
  if (profile.values.size() != pair.psi.size()) {
    fail(ErrorCode::PreconditionViolated, "Agmon profile must be sampled on the eigen-grid");
  }
  const EnergyDensities dens = energy_densities(pair, well);
  const double eps = pair.eps;
  const std::size_t n = pair.psi.size();
  const double log_h = std::log(pair.h);
  std::vector<double> psi_terms(n), dpsi_terms(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double log_w = (i == 0 || i + 1 == n) ? log_h - std::log(2.0) : log_h;
    const double weight = 2.0 * profile.values[i] / eps + log_w;
    psi_terms[i] = weight + 2.0 * log_abs(pair.psi[i]);
    dpsi_terms[i] = weight + 2.0 * log_abs(dens.dpsi[i]);
  }
  const double scale = std::log(eps) - 0.5 * std::log(std::abs(pair.E) + 1.0);
  const double log_a = 0.5 * log_sum(psi_terms);
  const double log_b = scale + 0.5 * log_sum(dpsi_terms);

  UpperBound out;
  out.delta_upper = eps * log_add(log_a, log_b);
  out.upper_0 = eps * (scale + log_abs(pair.dpsi0)) + profile.values.front();
  out.upper_L = eps * (scale + log_abs(pair.dpsiL)) + profile.values.back();
  return out;
}

LowerBound lower_bound_report(const Eigenpair& pair, const Well& well, const AgmonProfile& profile, double a,
                              double b) {
  LowerBound out;
  out.log_norm = log_window_norm(pair, a, b);
  out.a = a;
  out.b = b;
  out.window_distance = profile.infimum(well, std::max(a, 0.0), std::min(b, well.length()));
  out.delta_lower = -pair.eps * out.log_norm - out.window_distance;
  return out;
}

double boundary_lower_exponent(const Eigenpair& pair, const AgmonProfile& profile, bool at_L) {
  const double scale = std::log(pair.eps) - 0.5 * std::log(std::abs(pair.E) + 1.0);
  const double dpsi = at_L ? pair.dpsiL : pair.dpsi0;
  const double d = at_L ? profile.values.back() : profile.values.front();
  return -pair.eps * (scale + log_abs(dpsi)) - d;
}

std::vector<std::size_t> thinned_nodes(std::size_t n_nodes) {
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i < n_nodes; i += kPairThinning) nodes.push_back(i);
  if (n_nodes > 0 && nodes.back() != n_nodes - 1) nodes.push_back(n_nodes - 1);
  return nodes;
}

InequalityCheck tunneling_check(const Eigenpair& pair, const Well& well, const Perturbation& q, double alpha) {
  if (!(alpha > 0.0)) fail(ErrorCode::PreconditionViolated, "alpha must be positive");
  const EnergyDensities dens = energy_densities(pair, well);
  const double eps = pair.eps, E = pair.E, L = well.length();
  const std::size_t n = pair.x.size();

  // Components of {V - E > alpha^2}; nodes at the threshold are excluded.
  std::vector<int> component(n, -1);
  int components = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (well(pair.x[i]) - E > alpha * alpha) {
      if (i == 0 || component[i - 1] < 0) ++components;
      component[i] = components - 1;
    }
  }
  if (components == 0) {
    std::ostringstream msg;
    msg << "{V - E >= alpha^2} is empty for E=" << E << ", alpha=" << alpha;
    fail(ErrorCode::EmptyForbiddenRegion, msg.str());
  }

  // Cumulative int_0^x sqrt((V - E)_+), exact within each component.
  std::vector<double> cumulative(n, 0.0);
  const quad::Rule& rule = quad::gauss_legendre(16);
  const auto root = [&](double s) { return std::sqrt(std::max(well(s) - E, 0.0)); };
  for (std::size_t i = 1; i < n; ++i) cumulative[i] = cumulative[i - 1] + quad::apply(rule, root, pair.x[i - 1], pair.x[i]);

  const double constant = sup_abs_derivative(well) * L / (alpha * alpha) + q.sup_norm_bound(eps, L) * L / (alpha * eps);

  InequalityCheck out;
  out.worst_margin = std::numeric_limits<double>::infinity();
  for (int c = 0; c < components; ++c) {
    std::vector<std::size_t> nodes;
    for (std::size_t i : thinned_nodes(n)) {
      if (component[i] == c && std::isfinite(dens.log_script_E_plus[i])) nodes.push_back(i);
    }
    if (nodes.empty()) continue;
    const InequalityCheck part = scan_pairs(nodes, pair.x, [&](std::size_t i, std::size_t j) {
      const double rhs = 2.0 / eps * std::abs(cumulative[j] - cumulative[i]) + constant;
      return rhs - std::abs(dens.log_script_E_plus[i] - dens.log_script_E_plus[j]);
    });
    out.pairs += part.pairs;
    if (part.worst_margin < out.worst_margin) {
      out.worst_margin = part.worst_margin;
      out.worst_x = part.worst_x;
      out.worst_y = part.worst_y;
    }
  }
  out.components = components;
  out.pass = out.worst_margin >= -tol::exp;
  return out;
}

InequalityCheck rough_gronwall_check(const Eigenpair& pair, const Well& well, const Perturbation& q) {
  const EnergyDensities dens = energy_densities(pair, well);
  const double eps = pair.eps, E = pair.E;
  const std::size_t n = pair.x.size();
  // The sup over I_{x,y} is taken over the eigen-grid nodes in I_{x,y}.
  std::vector<double> level(n);
  for (std::size_t i = 0; i < n; ++i) level[i] = std::abs(well(pair.x[i]) - E + 1.0);
  const SparseMax sup(std::move(level));
  const double q_sup = q.sup_norm_bound(eps, well.length());

  std::vector<std::size_t> nodes;
  for (std::size_t i : thinned_nodes(n)) {
    if (std::isfinite(dens.log_script_E[i])) nodes.push_back(i);
  }
  return scan_pairs(nodes, pair.x, [&](std::size_t i, std::size_t j) {
    const double rhs = (pair.x[j] - pair.x[i]) / eps * (sup.max(i, j) + q_sup);
    return rhs - std::abs(dens.log_script_E[i] - dens.log_script_E[j]);
  });
}

double envelope_deviation(const Eigenpair& pair, const Well& well, const AgmonProfile& profile,
                          const std::vector<double>& points) {
  const EnergyDensities dens = energy_densities(pair, well);
  double worst = 0.0;
  for (double x : points) {
    const std::size_t i = std::min(pair.x.size() - 2, static_cast<std::size_t>(std::max(x, 0.0) / pair.h));
    const double t = std::clamp((x - pair.x[i]) / (pair.x[i + 1] - pair.x[i]), 0.0, 1.0);
    const double log_e = (1.0 - t) * dens.log_script_E[i] + t * dens.log_script_E[i + 1];
    worst = std::max(worst, std::abs(-0.5 * pair.eps * log_e - profile.at(well, x)));
  }
  return worst;
}

namespace {

GeometricControl control_over_schedule(const Well& well, const Perturbation& q, const std::vector<double>& schedule,
                                       const RegimeTarget& target,
                                       const std::function<double(const Eigenpair&)>& value) {
  GeometricControl out;
  out.eps = schedule;
  out.E.resize(schedule.size());
  out.values.resize(schedule.size());
  parallel_for(schedule.size(), [&](std::size_t s) {
    const Eigenpair pair = regime_eigenpair(well, q, target, schedule[s]);
    out.E[s] = pair.E;
    out.values[s] = value(pair);
  });
  out.infimum = schedule.empty() ? 0.0 : *std::min_element(out.values.begin(), out.values.end());
  out.pass = !schedule.empty() && out.infimum >= kControlFloor;
  return out;
}

}  // namespace

GeometricControl geometric_control_check(const Well& well, const Perturbation& q, const std::vector<double>& schedule,
                                         const RegimeTarget& target, double a, double b) {
  const double vc = well(0.5 * (a + b));
  return control_over_schedule(well, q, schedule, target, [&](const Eigenpair& pair) {
    if (pair.E < vc - pair.eps) {
      std::ostringstream msg;
      msg << "E=" << pair.E << " at eps=" << pair.eps << " lies below V(centre of U)=" << vc
          << "; forbidden-region windows belong to the lower-bound report";
      fail(ErrorCode::PreconditionViolated, msg.str());
    }
    return std::exp(log_window_norm(pair, a, b));
  });
}

GeometricControl geometric_control_boundary(const Well& well, const Perturbation& q,
                                            const std::vector<double>& schedule, const RegimeTarget& target,
                                            bool at_L) {
  const double vb = well(at_L ? well.length() : 0.0);
  return control_over_schedule(well, q, schedule, target, [&](const Eigenpair& pair) {
    if (!(pair.E > vb)) {
      std::ostringstream msg;
      msg << "E=" << pair.E << " at eps=" << pair.eps << " does not exceed V at the boundary (" << vb << ")";
      fail(ErrorCode::PreconditionViolated, msg.str());
    }
    return pair.eps * std::abs(at_L ? pair.dpsiL : pair.dpsi0) / std::sqrt(std::abs(pair.E) + 1.0);
  });
}

BoundsReport bounds_report(const Well& well, const Perturbation& q, const RegimeTarget& target,
                           const std::vector<double>& schedule, const BoundsOptions& options) {
  for (std::size_t i = 1; i < schedule.size(); ++i) {
    if (!(schedule[i] < schedule[i - 1])) fail(ErrorCode::PreconditionViolated, "schedule must strictly decrease");
  }
  BoundsReport report;
  report.target = target;
  report.rows.resize(schedule.size());
  parallel_for(schedule.size(), [&](std::size_t s) {
    const Eigenpair pair = regime_eigenpair(well, q, target, schedule[s]);
    const AgmonProfile profile = profile_for(pair, well);
    BoundsRow& row = report.rows[s];
    row.eps = pair.eps;
    row.E = pair.E;
    row.index = pair.index;
    row.upper = agmon_upper_report(pair, well, profile);
    if (options.window) row.window = lower_bound_report(pair, well, profile, options.window->first, options.window->second);
    row.lower_0 = boundary_lower_exponent(pair, profile, false);
    row.lower_L = boundary_lower_exponent(pair, profile, true);
    try {
      row.tunneling = tunneling_check(pair, well, q, options.alpha);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyForbiddenRegion) throw;
      row.tunneling = InequalityCheck{};
    }
    row.gronwall = rough_gronwall_check(pair, well, q);
  });
  return report;
}

BoundsVerdict verdict(const BoundsReport& report) {
  BoundsVerdict out;
  auto flag = [&](const std::string& what) {
    out.pass = false;
    out.failures.push_back(what);
  };
  std::vector<double> upper, window, lower0, lowerL;
  for (const BoundsRow& row : report.rows) {
    std::ostringstream at;
    at << " at eps=" << row.eps;
    upper.push_back(row.upper.delta_upper);
    lower0.push_back(row.lower_0);
    lowerL.push_back(row.lower_L);
    if (row.window) {
      window.push_back(row.window->delta_lower);
      if (row.window->delta_lower < -tol::exp) flag("window lower exponent below -tol_exp" + at.str());
    }
    if (row.lower_0 < -tol::exp) flag("boundary-0 lower exponent below -tol_exp" + at.str());
    if (row.lower_L < -tol::exp) flag("boundary-L lower exponent below -tol_exp" + at.str());
    if (!row.tunneling.pass) flag("tunneling inequality violated" + at.str());
    if (!row.gronwall.pass) flag("rough Gronwall inequality violated" + at.str());
  }
  if (!trend_ok(upper)) flag("upper exponent grows along the schedule");
  if (!window.empty() && !trend_ok(window)) flag("window lower exponent grows along the schedule");
  if (!trend_ok(lower0)) flag("boundary-0 lower exponent grows along the schedule");
  if (!trend_ok(lowerL)) flag("boundary-L lower exponent grows along the schedule");
  return out;
}

}  // namespace wellprobe
