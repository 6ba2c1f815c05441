#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "wellprobe/eigensolve.hpp"
#include "wellprobe/error.hpp"

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

const Potential& p1() {
  static const Potential v = Potential::parse("(x-1)^2", 2.0);
  return v;
}

const Potential& flat() {
  static const Potential v = Potential::parse("0", std::numbers::pi);
  return v;
}

double inner(const Eigenpair& a, const Eigenpair& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.psi.size(); ++i) s += a.psi[i] * b.psi[i];
  return s * a.h;
}

}  // namespace

TEST_CASE("Dirichlet Laplacian on [0, pi]") {
  const Grid grid(std::numbers::pi, 199);
  const TridiagonalOperator op = assemble(flat(), Perturbation(), 1.0, grid);
  const double h = grid.spacing();
  const std::vector<double> values = lowest_eigenvalues(op, 3);
  for (int k = 1; k <= 3; ++k) {
    // The discrete spectrum is known in closed form.
    const double discrete = 4.0 / (h * h) * std::pow(std::sin(0.5 * k * h), 2);
    CHECK(values[k - 1] == doctest::Approx(discrete).epsilon(1e-12));
    CHECK(std::abs(values[k - 1] - k * k) <= 1.01 * std::pow(k, 4) * h * h / 12.0);
  }
  const Eigenpair ground = eigenpair(op, values[0]);
  CHECK(std::abs(ground.dpsi0 - std::sqrt(2.0 / std::numbers::pi)) < 2e-4);
  CHECK(std::abs(ground.dpsiL + std::sqrt(2.0 / std::numbers::pi)) < 2e-4);
  CHECK(ground.l2_norm == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("quadratic well at eps = 0.02 has harmonic-oscillator levels") {
  const Grid grid = auto_grid(2.0, 1.0, 0.02);
  const TridiagonalOperator op = assemble(p1(), Perturbation(), 0.02, grid);
  CHECK(op.warning.empty());
  const std::vector<double> low = lowest_eigenvalues(op, 2);
  CHECK(low[0] == doctest::Approx(0.02).epsilon(0.01));
  CHECK(low[1] == doctest::Approx(0.06).epsilon(0.01));
  const std::vector<double> window = eigenvalues_in_window(op, 0.0, 0.09);
  CHECK(window.size() == 2);
  CHECK(window[0] == low[0]);
  CHECK(error_of([&] { eigenvalues_in_window(op, -1.0, -0.5); }) == ErrorCode::WindowEmpty);
}

TEST_CASE("ground state is positive with one peak at the well bottom") {
  const double eps = 0.05;
  const TridiagonalOperator op = assemble(p1(), Perturbation(), eps, auto_grid(2.0, 1.0, eps));
  const Eigenpair g = eigenpair(op, eigenvalue_by_index(op, 0));
  CHECK(g.index == 0);
  CHECK(g.node_count() == 0);
  CHECK(g.dpsi0 > 0.0);
  std::size_t peak = 0;
  for (std::size_t i = 1; i + 1 < g.psi.size(); ++i) {
    CHECK(g.psi[i] > 0.0);
    if (g.psi[i] > g.psi[peak]) peak = i;
  }
  CHECK(std::abs(g.x[peak] - 1.0) <= g.h);
  int ascents = 0, descents = 0;
  for (std::size_t i = 1; i < g.psi.size(); ++i) {
    if (i <= peak && g.psi[i] < g.psi[i - 1]) ++descents;
    if (i > peak && g.psi[i] > g.psi[i - 1]) ++ascents;
  }
  CHECK(ascents == 0);
  CHECK(descents == 0);
}

TEST_CASE("energy identity") {
  const double eps = 0.05;
  const TridiagonalOperator op = assemble(p1(), Perturbation::parse("eps*sin(5*x)"), eps, auto_grid(2.0, 1.0, eps));
  for (int k : {0, 3, 10}) {
    const Eigenpair pair = eigenpair(op, eigenvalue_by_index(op, k));
    // Forward differences make the identity exact for the discrete operator.
    double kinetic = 0.0, potential = 0.0;
    for (std::size_t i = 0; i + 1 < pair.psi.size(); ++i) {
      const double d = (pair.psi[i + 1] - pair.psi[i]) / pair.h;
      kinetic += d * d * pair.h;
    }
    for (std::size_t i = 1; i + 1 < pair.psi.size(); ++i) potential += op.potential[i - 1] * pair.psi[i] * pair.psi[i] * pair.h;
    CAPTURE(k);
    CHECK(std::abs(pair.E - eps * eps * kinetic - potential) <= 1e-10 * (std::abs(pair.E) + 1.0));
  }
}

TEST_CASE("matrix and shooting solvers agree") {
  SUBCASE("quadratic well, eps = 0.05, ground state") {
    const double eps = 0.05;
    const double matrix = richardson_eigenvalue(p1(), Perturbation(), eps, auto_grid(2.0, 1.0, eps), 0);
    const ShootingResult shot = shooting_eigenvalue(p1(), Perturbation(), eps, 0);
    CHECK(std::abs(matrix - shot.E) <= 1e-6 * std::max(1.0, std::abs(shot.E)));
    CHECK(shot.nodes == 0);
  }
  SUBCASE("node count of the sixth state") {
    const double eps = 0.05;
    const ShootingResult shot = shooting_eigenvalue(p1(), Perturbation(), eps, 5);
    CHECK(shot.nodes == 5);
    const TridiagonalOperator op = assemble(p1(), Perturbation(), eps, auto_grid(2.0, 1.0, eps));
    const Eigenpair pair = eigenpair(op, eigenvalue_by_index(op, 5));
    CHECK(pair.node_count() == 5);
    CHECK(std::abs(pair.E - shot.E) <= 1e-4 * shot.E);
  }
  SUBCASE("flat well: (k + 1)^2") {
    for (int k = 0; k < 4; ++k) {
      const ShootingResult shot = shooting_eigenvalue(flat(), Perturbation(), 1.0, k);
      CHECK(shot.E == doctest::Approx((k + 1) * (k + 1)).epsilon(1e-9));
      CHECK(shot.nodes == k);
    }
  }
}

TEST_CASE("residual gate") {
  const double eps = 0.02;
  const TridiagonalOperator op = assemble(p1(), Perturbation(), eps, auto_grid(2.0, 1.0, eps));
  for (int k : {0, 1, 12}) {
    Eigenpair pair = eigenpair(op, eigenvalue_by_index(op, k));
    CAPTURE(k);
    CHECK(pair.residual_norm <= 1e-10 * (std::abs(pair.E) + 1.0));
    CHECK(residual(pair, op) == pair.residual_norm);
    for (std::size_t i = 1; i + 1 < pair.psi.size(); ++i) pair.psi[i] += 1e-3 * std::sin(3.0 * pair.x[i]);
    CHECK(residual(pair, op) > 1e3 * std::max(pair.residual_norm, 1e-16));
  }
}

TEST_CASE("eigenpair rejects shifts away from the spectrum") {
  const TridiagonalOperator op = assemble(p1(), Perturbation(), 0.1, auto_grid(2.0, 1.0, 0.1));
  CHECK(error_of([&] { eigenpair(op, 0.2); }) == ErrorCode::PreconditionViolated);
}

TEST_CASE("property: eigenfunctions are orthonormal and eigenvalues simple") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> eps_draw(0.03, 0.2);
  for (int trial = 0; trial < 4; ++trial) {
    const double eps = eps_draw(rng);
    CAPTURE(eps);
    const TridiagonalOperator op = assemble(p1(), Perturbation(), eps, auto_grid(2.0, 1.0, eps));
    const std::vector<double> values = lowest_eigenvalues(op, 6);
    std::vector<Eigenpair> pairs;
    for (int k = 0; k < 6; ++k) {
      if (k > 0) CHECK(values[k] - values[k - 1] > 100.0 * op.eigen_tolerance(values[k]));
      pairs.push_back(eigenpair(op, values[k]));
      CHECK(pairs.back().index == k);
      CHECK(pairs.back().node_count() == k);
      CHECK(values[k] >= op.gershgorin_lower());
      CHECK(values[k] <= op.gershgorin_upper());
    }
    for (int a = 0; a < 6; ++a) {
      for (int b = 0; b <= a; ++b) {
        const double expected = a == b ? 1.0 : 0.0;
        CHECK(std::abs(inner(pairs[a], pairs[b]) - expected) <= 1e-10);
      }
    }
  }
}

TEST_CASE("property: sturm count is monotone") {
  const TridiagonalOperator op = assemble(p1(), Perturbation(), 0.1, auto_grid(2.0, 1.0, 0.1));
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> sigma(-1.0, op.gershgorin_upper() + 1.0);
  for (int i = 0; i < 200; ++i) {
    double a = sigma(rng), b = sigma(rng);
    if (a > b) std::swap(a, b);
    CHECK(sturm_count(op, a) <= sturm_count(op, b));
  }
  CHECK(sturm_count(op, op.gershgorin_lower() - 1.0) == 0);
  CHECK(sturm_count(op, op.gershgorin_upper() + 1.0) == op.grid.n_interior());
}

TEST_CASE("eigenvalue error is second order in h") {
  SUBCASE("flat well against the exact value") {
    double previous = 0.0;
    for (int n : {49, 99, 199, 399}) {
      const TridiagonalOperator op = assemble(flat(), Perturbation(), 1.0, Grid(std::numbers::pi, n));
      const double err = std::abs(eigenvalue_by_index(op, 1) - 4.0);
      if (previous > 0.0) {
        CHECK(previous / err >= 3.5);
        CHECK(previous / err <= 4.5);
      }
      previous = err;
    }
  }
  SUBCASE("quadratic well against shooting") {
    const double eps = 0.1;
    const double reference = shooting_eigenvalue(p1(), Perturbation(), eps, 1).E;
    Grid grid(2.0, 199);
    double previous = 0.0;
    for (int level = 0; level < 3; ++level, grid = grid.refined()) {
      const double err = std::abs(eigenvalue_by_index(assemble(p1(), Perturbation(), eps, grid), 1) - reference);
      if (previous > 0.0) {
        CHECK(previous / err >= 3.5);
        CHECK(previous / err <= 4.5);
      }
      previous = err;
    }
    CHECK(std::abs(richardson_eigenvalue(p1(), Perturbation(), eps, Grid(2.0, 199), 1) - reference) < previous);
  }
}

TEST_CASE("grid resolution guards") {
  CHECK(error_of([] { assemble(p1(), Perturbation(), 0.02, Grid(2.0, 50)); }) == ErrorCode::GridTooCoarse);
  const TridiagonalOperator loose = assemble(p1(), Perturbation(), 0.1, Grid(2.0, 100));
  CHECK_FALSE(loose.warning.empty());
  CHECK(assemble(p1(), Perturbation(), 0.1, auto_grid(2.0, 1.0, 0.1)).warning.empty());
  CHECK(error_of([] { auto_grid(2.0, 1.0, 1e-5); }) == ErrorCode::ConfigError);
  CHECK(auto_grid(2.0, 0.0, 0.1).n_interior() == 400);
  CHECK(Grid(2.0, 99).refined().spacing() == doctest::Approx(0.5 * Grid(2.0, 99).spacing()).epsilon(1e-15));
}
