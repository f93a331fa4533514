#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "finfuel/model.hpp"

using finfuel::Model;
using finfuel::PhiCurve;

TEST_CASE("quadratic family critical levels, canonical parameters") {
  const Model m = Model::quadratic(0.5, 0.4);
  CHECK(m.lambda() == 0.5);
  CHECK(m.a() == 0.4);
  CHECK(m.sqrt_two_lambda() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(m.c_hat() == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(m.c_o() == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(m.r_hat() == doctest::Approx(0.09).epsilon(1e-15));
  CHECK(m.gamma_o() == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("quadratic family critical levels, second parameter set") {
  const Model m = Model::quadratic(2.0, 0.25);
  CHECK(m.sqrt_two_lambda() == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(m.c_hat() == doctest::Approx(0.625).epsilon(1e-15));
  CHECK(m.c_o() == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(m.r_hat() == doctest::Approx(0.140625).epsilon(1e-15));
  CHECK(m.gamma_o() == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("curve point values") {
  const Model m = Model::quadratic(0.5, 0.4);
  const auto p = m.phi(0.5);
  CHECK(p.value == doctest::Approx(0.45).epsilon(1e-15));
  CHECK(p.slope == doctest::Approx(-1.4).epsilon(1e-15));
  CHECK(p.curvature == 2.0);
  CHECK(m.phi(1.0).value == 0.0);
}

TEST_CASE("running terms: roots and signs") {
  const Model m = Model::quadratic(0.5, 0.4);
  CHECK(m.running(0.7).r == doctest::Approx(0.09).epsilon(1e-15));
  CHECK(m.running(0.7).k == doctest::Approx(0.0).scale(1).epsilon(1e-15));
  CHECK(m.running(0.4).r == doctest::Approx(0.0).scale(1).epsilon(1e-15));
  CHECK(m.running(1.0).r == doctest::Approx(0.0).scale(1).epsilon(1e-15));

  // r negative below c_o, positive between c_o and 1, maximal at c_hat.
  CHECK(m.running(0.2).r < 0);
  CHECK(m.running(0.55).r > 0);
  CHECK(m.running(0.55).r < m.r_hat());
  CHECK(m.running(0.9).r > 0);
}

TEST_CASE("running terms: shape properties on a grid") {
  const Model m = Model::quadratic(0.5, 0.4);
  const int n = 10000;
  double prev_k = m.running(0.0).k;
  for (int i = 1; i <= n; ++i) {
    const double c = static_cast<double>(i) / n;
    const auto rt = m.running(c);
    CHECK(rt.k > prev_k);  // marginal penalty strictly increasing
    prev_k = rt.k;
    CHECK(m.r_slope(c) == doctest::Approx(-rt.k / m.lambda()).epsilon(1e-12));
  }
  // concavity of r: nonpositive second differences
  const double h = 1.0 / n;
  for (int i = 1; i < n; ++i) {
    const double c = static_cast<double>(i) / n;
    const double second =
        m.running(c - h).r - 2 * m.running(c).r + m.running(c + h).r;
    CHECK(second <= 1e-12);
  }
}

TEST_CASE("custom curve reproduces the quadratic closed forms") {
  const double a = 0.4;
  PhiCurve curve;
  curve.value = [a](double c) { return (a + (1 - c)) * (1 - c); };
  curve.slope = [a](double c) { return -a - 2 * (1 - c); };
  curve.curvature = [](double) { return 2.0; };
  const Model m = Model::from_curve(0.5, curve);
  CHECK(std::isnan(m.a()));
  CHECK(m.c_hat() == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(m.c_o() == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(m.r_hat() == doctest::Approx(0.09).epsilon(1e-12));
}

TEST_CASE("degenerate curves are rejected") {
  PhiCurve flat;  // slope never crosses -1
  flat.value = [](double c) { return 2 * (1 - c); };
  flat.slope = [](double) { return -2.0; };
  flat.curvature = [](double) { return 0.0; };
  CHECK_THROWS_AS(Model::from_curve(0.5, flat), std::invalid_argument);

  PhiCurve touch;  // r(0) == 0: no interior lower root
  touch.value = [](double c) { return (1 - c) * (1 - c); };
  touch.slope = [](double c) { return -2 * (1 - c); };
  touch.curvature = [](double) { return 2.0; };
  CHECK_THROWS_AS(Model::from_curve(0.5, touch), std::invalid_argument);

  PhiCurve rising;  // not decreasing
  rising.value = [](double c) { return (1 - c) * (1 - c) * (1 - c); };
  rising.slope = [](double c) { return 3 * (1 - c) * (1 - c); };
  rising.curvature = [](double c) { return -6 * (1 - c); };
  CHECK_THROWS_AS(Model::from_curve(0.5, rising), std::invalid_argument);

  PhiCurve nonzero_end;  // cost does not vanish at full inventory
  nonzero_end.value = [](double c) { return 1.5 - c; };
  nonzero_end.slope = [](double) { return -1.0; };
  nonzero_end.curvature = [](double) { return 0.0; };
  CHECK_THROWS_AS(Model::from_curve(0.5, nonzero_end), std::invalid_argument);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(Model::quadratic(0.0, 0.4), std::invalid_argument);
  CHECK_THROWS_AS(Model::quadratic(-1.0, 0.4), std::invalid_argument);
  CHECK_THROWS_AS(Model::quadratic(0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(Model::quadratic(0.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(Model::quadratic(0.5, -0.2), std::invalid_argument);

  const Model m = Model::quadratic(0.5, 0.4);
  CHECK_THROWS_AS(m.phi(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(m.phi(1.1), std::invalid_argument);
  CHECK_THROWS_AS(m.running(std::nan("")), std::invalid_argument);
}
