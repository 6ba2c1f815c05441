#include <cmath>
#include <vector>

#include "doctest.h"
#include "wellprobe/error.hpp"
#include "wellprobe/potential.hpp"

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

Well p1() { return Well(Potential::parse("(x-1)^2", 2.0)); }

}  // namespace

TEST_CASE("validate_single_well locates the quadratic minimiser") {
  const WellCertificate cert = validate_single_well(Potential::parse("(x-1)^2", 2.0), kValidationGridSize);
  CHECK(cert.x0 == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(cert.E0) <= 1e-18);
  CHECK(cert.v_max == doctest::Approx(1.0));
  CHECK(cert.sign_violations == 0);

  const Well asym(Potential::parse("(x-0.7)^2", 2.0));
  CHECK(asym.x0() == doctest::Approx(0.7).epsilon(1e-10));
  CHECK(asym.v_max() == doctest::Approx(1.69));
}

TEST_CASE("validate_single_well rejects non single-well shapes") {
  CHECK(error_of([] { validate_single_well(Potential::parse("x^2", 2.0)); }) == ErrorCode::NotSingleWell);
  CHECK(error_of([] { validate_single_well(Potential::parse("cos(2*pi*x)", 2.0)); }) == ErrorCode::NotSingleWell);
  CHECK(error_of([] { validate_single_well(Potential::parse("(x-1)^2", 2.0), 8); }) ==
        ErrorCode::PreconditionViolated);
  CHECK(error_of([] { Potential::parse("(x-1)^2", 0.0); }) == ErrorCode::DegenerateDomain);
  CHECK(error_of([] { Potential::parse("(x-1)^2", -1.0); }) == ErrorCode::DegenerateDomain);
}

TEST_CASE("turning points of the quadratic well") {
  const Well well = p1();
  SUBCASE("interior energy: closed-form roots 1 -+ 1/2") {
    const TurningPoints tp = turning_points(well, 0.25);
    CHECK(tp.x_minus == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(tp.x_plus == doctest::Approx(1.5).epsilon(1e-12));
  }
  SUBCASE("energy above both boundary values clamps to the domain") {
    const TurningPoints tp = turning_points(well, 4.0);
    CHECK(tp.x_minus == 0.0);
    CHECK(tp.x_plus == 2.0);
  }
  SUBCASE("ground energy collapses K_E to x0") {
    const TurningPoints tp = turning_points(well, 0.0);
    CHECK(tp.x_minus == doctest::Approx(1.0));
    CHECK(tp.x_plus == doctest::Approx(1.0));
  }
  SUBCASE("energy below E0 is rejected") {
    CHECK(error_of([&] { turning_points(well, -0.1); }) == ErrorCode::EnergyBelowGround);
  }
}

TEST_CASE("property: turning points are monotone, clamped and accurate") {
  for (const char* text : {"(x-1)^2", "(x-0.7)^2", "exp(2*x) - 3*x"}) {
    const Well well(Potential::parse(text, 2.0));
    const double vmax = std::max(well.certificate().v_at_0, well.certificate().v_at_L);
    double last_minus = well.x0(), last_plus = well.x0();
    CAPTURE(text);
    for (int i = 0; i <= 60; ++i) {
      const double E = well.E0() + (vmax + 0.5 - well.E0()) * i / 60.0;
      const TurningPoints tp = turning_points(well, E);
      CHECK(tp.x_minus <= last_minus);
      CHECK(tp.x_plus >= last_plus);
      CHECK(tp.x_minus <= well.x0());
      CHECK(tp.x_plus >= well.x0());
      if (tp.x_minus > 0.0 && E > well.E0()) CHECK(std::abs(well(tp.x_minus) - E) <= root_tolerance(E));
      if (tp.x_plus < well.length() && E > well.E0()) CHECK(std::abs(well(tp.x_plus) - E) <= root_tolerance(E));
      CHECK((tp.x_minus == 0.0) == (E >= well.certificate().v_at_0));
      CHECK((tp.x_plus == well.length()) == (E >= well.certificate().v_at_L));
      if (E >= vmax) {
        CHECK(tp.x_minus == 0.0);
        CHECK(tp.x_plus == well.length());
      }
      last_minus = tp.x_minus;
      last_plus = tp.x_plus;
    }
  }
}

TEST_CASE("perturbation norms and vanishing along a schedule") {
  const Perturbation q = Perturbation::parse("eps*sin(5*x)");
  CHECK(q.sup_norm_bound(0.1, 2.0) == doctest::Approx(0.1).epsilon(1e-5));
  CHECK(q.c1_norm_bound(0.1, 2.0) == doctest::Approx(0.5).epsilon(1e-5));
  const std::vector<double> schedule{0.1, 0.05, 0.02};
  CHECK(q.vanishes_along(schedule, 2.0));
  CHECK_FALSE(Perturbation::parse("0.1*sin(5*x)").vanishes_along(schedule, 2.0));
  CHECK(Perturbation().is_zero());
  CHECK(Perturbation::parse("0").is_zero());
  CHECK(Perturbation()(0.1, 0.3) == 0.0);
}

TEST_CASE("V may not depend on eps") {
  CHECK(error_of([] { Potential::parse("eps*x", 1.0); }) == ErrorCode::ParseError);
}
