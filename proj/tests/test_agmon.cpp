#include <cmath>
#include <random>

#include "doctest.h"
#include "wellprobe/agmon.hpp"
#include "wellprobe/error.hpp"

using namespace wellprobe;

namespace {

Well p1() { return Well(Potential::parse("(x-1)^2", 2.0)); }

// Independent oracle: plain trapezoid rule on sqrt((V - E)_+) with a million
// panels from the turning point out to x.
double trapezoid_oracle(const Well& well, double E, double from, double to, int panels = 1000000) {
  const double h = (to - from) / panels;
  auto f = [&](double s) { return std::sqrt(std::max(well(s) - E, 0.0)); };
  double sum = 0.5 * (f(from) + f(to));
  for (int i = 1; i < panels; ++i) sum += f(from + i * h);
  return std::abs(sum * h);
}

}  // namespace

TEST_CASE("agmon_distance closed-form cases") {
  const Well well = p1();
  // int_0^1 |s - 1| ds
  CHECK(agmon_distance(well, 0.0, 0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(agmon_distance(well, 0.25, 1.2) == 0.0);

  const double d = agmon_distance(well, 0.25, 2.0);
  CHECK(std::abs(d - 0.2683929647766172) < tol::quad);
  // 1e6-panel trapezoid agrees to its own O(h^1.5) accuracy near the root.
  CHECK(std::abs(d - trapezoid_oracle(well, 0.25, 1.5, 2.0)) < 1e-8);
}

TEST_CASE("agmon_distance rejects points outside the domain") {
  const Well well = p1();
  CHECK_THROWS_AS(agmon_distance(well, 0.1, 2.5), Error);
  try {
    agmon_distance(well, 0.1, -0.1);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfDomain);
  }
}

TEST_CASE("agmon_profile special energies") {
  const Well well = p1();
  SUBCASE("above max V the distance vanishes identically") {
    for (double E : {1.0, 1.5, 10.0}) {
      const AgmonProfile prof = agmon_profile(well, E, 128);
      for (double v : prof.values) CHECK(v == 0.0);
    }
  }
  SUBCASE("ground energy gives |x - 1|^2 / 2") {
    const AgmonProfile prof = agmon_profile(well, 0.0, 257);
    for (std::size_t i = 0; i < prof.grid.size(); ++i) {
      const double x = prof.grid[i];
      CHECK(std::abs(prof.values[i] - 0.5 * (x - 1) * (x - 1)) < 2 * tol::quad);
    }
  }
  SUBCASE("energies below E0 reuse the E0 profile") {
    const AgmonProfile below = agmon_profile(well, -1.0, 100);
    const AgmonProfile at = agmon_profile(well, 0.0, 100);
    CHECK(below.energy == at.energy);
    CHECK(below.values == at.values);
  }
  SUBCASE("grid too small") {
    CHECK_THROWS_AS(agmon_profile(well, 0.0, 32), Error);
  }
}

TEST_CASE("property: profile invariants and agreement with the pointwise distance") {
  std::mt19937 rng(7);
  for (const char* text : {"(x-1)^2", "(x-0.7)^2", "exp(2*x) - 3*x"}) {
    const Well well(Potential::parse(text, 2.0));
    const double lip = AgmonProfile::lipschitz_bound(well);
    std::uniform_real_distribution<double> energy(well.E0(), well.v_max() + 1.0);
    std::uniform_real_distribution<double> point(0.0, well.length());
    CAPTURE(text);
    for (int trial = 0; trial < 12; ++trial) {
      const double E = energy(rng);
      const AgmonProfile prof = agmon_profile(well, E, 200);
      for (std::size_t i = 0; i < prof.grid.size(); ++i) {
        const double x = prof.grid[i];
        CHECK(prof.values[i] >= 0.0);
        if (prof.turning.contains(x)) CHECK(prof.values[i] == 0.0);
        if (i > 0) {
          if (x <= prof.turning.x_minus) CHECK(prof.values[i] <= prof.values[i - 1]);
          if (prof.grid[i - 1] >= prof.turning.x_plus) CHECK(prof.values[i] >= prof.values[i - 1]);
          CHECK(std::abs(prof.values[i] - prof.values[i - 1]) <= lip * (x - prof.grid[i - 1]) + tol::quad);
        }
      }
      for (int k = 0; k < 5; ++k) {
        const double x = point(rng);
        CHECK(std::abs(prof.at(well, x) - agmon_distance(well, E, x)) <= 3 * tol::quad);
      }
      // Grid nodes themselves agree with pointwise evaluation.
      for (std::size_t i = 0; i < prof.grid.size(); i += 37) {
        CHECK(std::abs(prof.values[i] - agmon_distance(well, E, prof.grid[i])) <= 2 * tol::quad);
      }
    }
  }
}

TEST_CASE("property: d_{A,E} is uniformly continuous in E") {
  const Well well = p1();
  const AgmonProfile base = agmon_profile(well, 0.3, 101);
  double previous_gap = INFINITY;
  for (double dE : {0.1, 0.01, 0.001, 0.0001}) {
    const AgmonProfile shifted = agmon_profile(well, 0.3 + dE, 101);
    double gap = 0.0;
    for (std::size_t i = 0; i < base.values.size(); ++i) gap = std::max(gap, std::abs(base.values[i] - shifted.values[i]));
    CAPTURE(dE);
    CHECK(gap < previous_gap);
    previous_gap = gap;
  }
  CHECK(previous_gap < 1e-3);
}

TEST_CASE("observation-window infimum") {
  const Well well = p1();
  const AgmonProfile prof = agmon_profile(well, 0.0, 201);
  CHECK(prof.infimum(well, 1.8, 2.0) == doctest::Approx(0.32).epsilon(1e-10));
  CHECK(prof.infimum(well, 0.0, 0.2) == doctest::Approx(0.32).epsilon(1e-10));
  CHECK(prof.infimum(well, 0.9, 1.1) == 0.0);
}
