#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "wellprobe/error.hpp"
#include "wellprobe/measure.hpp"

using namespace wellprobe;

namespace {

ErrorCode error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::ConfigError;
}

const Well& p1() {
  static const Well well(Potential::parse("(x-1)^2", 2.0));
  return well;
}

std::size_t find_phi(const MeasureReport& r, const std::string& name) {
  for (std::size_t i = 0; i < r.phi_names.size(); ++i) {
    if (r.phi_names[i] == name) return i;
  }
  FAIL("missing test function " << name);
  return 0;
}

}  // namespace

TEST_CASE("limit_measure selects the regime and normalisation") {
  const MeasureSpec interior = limit_measure(p1(), 0.25);
  CHECK(interior.regime == Regime::Interior);
  CHECK(std::abs(interior.C_star - 1.0 / std::numbers::pi) < 1e-10);

  const MeasureSpec ground = limit_measure(p1(), 0.0);
  CHECK(ground.regime == Regime::Ground);
  CHECK(ground.x0 == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(error_of([&] { (void)ground.density(1.0); }) == ErrorCode::PreconditionViolated);

  const MeasureSpec high = limit_measure(p1(), kInfiniteEnergy);
  CHECK(high.regime == Regime::HighEnergy);
  CHECK(high.density(0.3) == 0.5);

  CHECK(error_of([] { limit_measure(p1(), -0.1); }) == ErrorCode::EnergyBelowGround);
}

TEST_CASE("C_star above the boundary values agrees with a midpoint-rule oracle") {
  const MeasureSpec spec = limit_measure(p1(), 2.0);
  CHECK(std::abs(spec.C_star - 2.0 / std::numbers::pi) < 1e-10);
  // E* > max V: the integrand is smooth, so ten million midpoints are exact to ~1e-13.
  const int n = 10000000;
  const double h = 2.0 / n;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = (i + 0.5) * h;
    sum += 1.0 / std::sqrt(2.0 - (x - 1) * (x - 1));
  }
  CHECK(std::abs(spec.C_star - 1.0 / (sum * h)) < 1e-10);
}

TEST_CASE("predicted moments") {
  CHECK(predicted_moment(limit_measure(p1(), 0.0), [](double x) { return x; }) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(predicted_moment(limit_measure(p1(), kInfiniteEnergy), [](double x) { return x; }) ==
        doctest::Approx(1.0).epsilon(1e-12));
  const MeasureSpec interior = limit_measure(p1(), 0.25);
  CHECK(std::abs(predicted_moment(interior, [](double) { return 1.0; }) - 1.0) < tol::sing);
  // Arcsine law: (2 / pi) arcsin(0.2) for the sharp window [0.9, 1.1].
  const double window = predicted_moment(interior, [](double x) { return (x >= 0.9 && x <= 1.1) ? 1.0 : 0.0; });
  CHECK(std::abs(window - 0.12818843369794986) < 1e-8);
  // The erf-smoothed window stays close to the sharp value.
  CHECK(std::abs(predicted_moment(interior, smoothed_indicator(0.9, 1.1, 0.025).f) - 0.12818843369794986) < 2e-4);
}

TEST_CASE("predicted boundary traces") {
  const auto [below0, belowL] = predicted_boundary_traces(limit_measure(p1(), 0.25));
  CHECK(below0 == 0.0);
  CHECK(belowL == 0.0);
  const auto [above0, aboveL] = predicted_boundary_traces(limit_measure(p1(), 2.0));
  CHECK(above0 == doctest::Approx(4.0 / std::numbers::pi).epsilon(1e-10));
  CHECK(aboveL == doctest::Approx(4.0 / std::numbers::pi).epsilon(1e-10));
  const auto [high0, highL] = predicted_boundary_traces(limit_measure(p1(), kInfiniteEnergy));
  CHECK(high0 == 1.0);
  CHECK(highL == 1.0);
  CHECK(error_of([] { predicted_boundary_traces(limit_measure(p1(), 0.0)); }) ==
        ErrorCode::GroundRegimeHasNoTraceLimit);
}

TEST_CASE("property: every limit measure has unit mass") {
  std::mt19937 rng(3);
  for (const char* text : {"(x-1)^2", "(x-0.7)^2", "exp(2*x) - 3*x"}) {
    const Well well(Potential::parse(text, 2.0));
    std::uniform_real_distribution<double> energy(well.E0() + 1e-3, well.v_max() + 2.0);
    CAPTURE(text);
    for (int trial = 0; trial < 10; ++trial) {
      const double E = energy(rng);
      CAPTURE(E);
      const MeasureSpec spec = limit_measure(well, E);
      CHECK(std::abs(predicted_moment(spec, [](double) { return 1.0; }) - 1.0) < tol::sing);
      const auto [t0, tL] = predicted_boundary_traces(spec);
      CHECK(t0 >= 0.0);
      CHECK(tL >= 0.0);
    }
  }
}

TEST_CASE("property: odd moments vanish for the symmetric well") {
  const auto odd = [](double x) { return (x - 1) + std::pow(x - 1, 3); };
  for (double E : {0.1, 0.25, 0.7, 1.5}) {
    CHECK(std::abs(predicted_moment(limit_measure(p1(), E), odd)) < 1e-9);
  }
  const std::vector<TestFunction> basket{{"odd", odd, -2.0, 2.0}};
  const MeasureReport r = measure_convergence_report(p1(), Perturbation(), {Regime::Interior, 0.25}, {0.1, 0.05}, basket);
  for (const MeasureSample& s : r.samples) CHECK(std::abs(s.empirical[0]) < 1e-10);
}

TEST_CASE("ground-regime report: mass concentrates at x0") {
  const std::vector<double> schedule{0.1, 0.05, 0.025, 0.0125};
  const MeasureReport r =
      measure_convergence_report(p1(), Perturbation(), {Regime::Ground}, schedule, default_basket(2.0, {}, 0.025));
  CHECK_FALSE(r.has_trace_prediction);
  CHECK_FALSE(r.note.empty());
  REQUIRE(r.samples.size() == 4);
  const std::size_t one = find_phi(r, "one"), x = find_phi(r, "x"), x2 = find_phi(r, "x2");
  for (std::size_t s = 0; s < 4; ++s) {
    const MeasureSample& sample = r.samples[s];
    CHECK(sample.index == 0);
    CHECK(std::abs(sample.empirical[one] - 1.0) < 1e-12);
    CHECK(sample.trace0 >= 0.0);
    CHECK(sample.traceL >= 0.0);
    // Harmonic oscillator: <(x - 1)^2> = eps / 2.
    CHECK(sample.empirical[x2] == doctest::Approx(1.0 + 0.5 * sample.eps).epsilon(1e-4));
    if (s > 0) CHECK(r.moment_error(s, x2) < r.moment_error(s - 1, x2));
  }
  CHECK(r.moment_error(3, x) < 0.02);
  CHECK(verdict(r).pass);
}

TEST_CASE("property: empirical moments lie in the range of the test function") {
  const std::vector<TestFunction> basket = default_basket(2.0, {{0.2, 0.6}, {0.9, 1.1}}, 0.025);
  for (const Regime regime : {Regime::Ground, Regime::Interior, Regime::HighEnergy}) {
    const MeasureReport r = measure_convergence_report(p1(), Perturbation::parse("eps*sin(5*x)"),
                                                       {regime, 0.4, 50.0}, {0.1, 0.05}, basket);
    for (const MeasureSample& s : r.samples) {
      for (std::size_t p = 0; p < basket.size(); ++p) {
        CAPTURE(basket[p].name);
        CHECK(s.empirical[p] >= basket[p].min_value - 1e-12);
        CHECK(s.empirical[p] <= basket[p].max_value + 1e-12);
      }
    }
  }
}

TEST_CASE("interior and high-energy reports") {
  SUBCASE("smoothed window moment at E* = 1/4") {
    const MeasureReport r = measure_convergence_report(p1(), Perturbation(), {Regime::Interior, 0.25},
                                                       {0.1, 0.05, 0.02, 0.01}, {smoothed_indicator(0.9, 1.1, 0.025)});
    const double last = r.samples.back().empirical[0];
    CHECK(std::abs(last - 0.12818843369794986) / 0.12818843369794986 < 0.05);
    CHECK(r.samples.back().trace0 < 1e-4);
  }
  SUBCASE("high-energy trace") {
    const MeasureReport r =
        measure_convergence_report(p1(), Perturbation(), {Regime::HighEnergy}, {0.05, 0.025}, {});
    CHECK(r.has_trace_prediction);
    for (const MeasureSample& s : r.samples) {
      CHECK(s.E == doctest::Approx(50.0).epsilon(0.02));
      CHECK(s.trace0 == doctest::Approx(1.0).epsilon(0.05));
    }
  }
  SUBCASE("schedule must decrease") {
    CHECK(error_of([] { measure_convergence_report(p1(), Perturbation(), {}, {0.05, 0.1}, {}); }) ==
          ErrorCode::PreconditionViolated);
  }
}

TEST_CASE("trend_ok") {
  CHECK(trend_ok({0.4, 0.2, 0.1, 0.05}));
  CHECK(trend_ok({0.4, 0.2, 0.25, 0.3}));   // x1.25 steps stay under the slack
  CHECK_FALSE(trend_ok({0.4, 0.2, 0.1, 0.2}));
  CHECK(trend_ok({1.0, 1e-15, 3e-15, 2e-16}));  // round-off noise
  CHECK(trend_ok({0.3}));
  CHECK(trend_ok({5.0, 0.1, 0.1, 0.1}));  // only the last three points count
}

TEST_CASE("basket_from_names") {
  const auto basket = basket_from_names(2.0, {"one", "x2", "ind:0.9:1.1"}, 0.025);
  REQUIRE(basket.size() == 3);
  CHECK(basket[1].f(1.5) == 2.25);
  CHECK(basket[2].f(1.0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(error_of([] { basket_from_names(2.0, {"cosh"}, 0.025); }) == ErrorCode::ConfigError);
  CHECK(error_of([] { basket_from_names(2.0, {"ind:1.1:0.9"}, 0.025); }) == ErrorCode::ConfigError);
  CHECK(error_of([] { basket_from_names(2.0, {"ind:0.9"}, 0.025); }) == ErrorCode::ConfigError);
}

TEST_CASE("Husimi transform of the near-Gaussian ground state") {
  const double eps = 0.02;
  const Eigenpair g = regime_eigenpair(p1(), Perturbation(), {Regime::Ground}, eps);
  const HusimiField field = husimi(g, p1(), {81, 81, 1.0});
  CHECK(field.raw_mass == doctest::Approx(1.0).epsilon(1e-3));
  // A Gaussian of width sqrt(eps) has H = exp(-((x - 1)^2 + xi^2) / (2 eps)) / (2 pi eps).
  for (std::size_t j = 30; j <= 50; j += 5) {
    for (std::size_t k = 30; k <= 50; k += 5) {
      const double x = field.x[j], xi = field.xi[k];
      const double exact = std::exp(-((x - 1) * (x - 1) + xi * xi) / (2 * eps)) / (2 * std::numbers::pi * eps);
      CHECK(field.at(j, k) * field.raw_mass == doctest::Approx(exact).epsilon(1e-3));
    }
  }
}

TEST_CASE("Husimi diagnostics of an interior mode") {
  const double eps = 0.02;
  const Eigenpair pair = regime_eigenpair(p1(), Perturbation(), {Regime::Interior, 0.25}, eps);
  const HusimiField field = husimi(pair, p1());
  CHECK(field.sigma == doctest::Approx(std::sqrt(eps)));
  CHECK(field.raw_mass >= 0.95);
  CHECK(field.raw_mass <= 1.05);
  for (double v : field.values) CHECK(v >= 0.0);
  const HusimiDiagnostics d = husimi_diagnostics(field, pair, p1());
  CHECK(d.tube_fraction >= 0.9);
  CHECK(std::abs(d.positive_fraction - 0.5) <= 0.05);
  CHECK(d.marginal_l1 <= 0.1);
  CHECK(d.marginal_l1_raw > d.marginal_l1);

  HusimiOptions narrow;
  narrow.xi_max = 0.3;
  CHECK(error_of([&] { husimi(pair, p1(), narrow); }) == ErrorCode::PhaseWindowTooSmall);
}
