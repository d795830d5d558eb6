#include <doctest.h>

#include <cmath>
#include <random>

#include "fracac/errors.hpp"
#include "fracac/potential.hpp"

using namespace fracac;

TEST_CASE("quartic values") {
  auto q = make_quartic();
  CHECK(q.W(1) == 0.0);
  CHECK(q.W(-1) == 0.0);
  CHECK(q.W1(0.5) == doctest::Approx(-0.375));
  CHECK(q.W2(1) == doctest::Approx(2.0));
  CHECK(q.W(0) == doctest::Approx(0.25));
  CHECK(q.W1(0) == 0.0);
  CHECK(q.W2(0) == doctest::Approx(-1.0));
  CHECK(q.W1(2) == doctest::Approx(6.0));
  CHECK(q.growth_exponent() == 4);
  CHECK(q.wells() == std::vector<double>{-1.0, 1.0});
}

TEST_CASE("multiwell products") {
  auto two = make_multiwell({-1, 1});
  auto q = make_quartic();
  for (double t : {-2.0, -0.3, 0.0, 0.7, 1.5}) CHECK(two.W(t) == doctest::Approx(4 * q.W(t)));
  auto three = make_multiwell({-1, 0, 1});
  CHECK(three.W(0.5) == doctest::Approx(0.140625));
  CHECK(three.W2(0) == doctest::Approx(2.0));
  CHECK(three.growth_exponent() == 6);
  CHECK_THROWS_AS(make_multiwell({1, -1}), ConfigError);
  CHECK_THROWS_AS(make_multiwell({0, 0}), ConfigError);
  CHECK_THROWS_AS(make_multiwell({0}), ConfigError);
  auto sym = make_multiwell({-2, -0.5, 0.5, 2});
  for (double t = -3; t <= 3; t += 0.01) CHECK(std::abs(sym.W(t) - sym.W(-t)) <= 1e-12 * std::max(1.0, sym.W(t)));
}

TEST_CASE("derivatives agree with finite differences") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-3, 3);
  for (const auto& pot : {make_quartic(), make_multiwell({-1, 0, 1}), make_polynomial({1, 0, -2, 0, 1})}) {
    for (int k = 0; k < 1000; ++k) {
      const double t = U(rng), d = 1e-5;
      const double fd1 = (pot.W(t + d) - pot.W(t - d)) / (2 * d);
      const double fd2 = (pot.W1(t + d) - pot.W1(t - d)) / (2 * d);
      CHECK(std::abs(pot.W1(t) - fd1) / std::max(1.0, std::abs(pot.W1(t))) < 1e-6);
      CHECK(std::abs(pot.W2(t) - fd2) / std::max(1.0, std::abs(pot.W2(t))) < 1e-6);
    }
  }
}

TEST_CASE("Taylor increments") {
  auto pot = make_multiwell({-1, 0, 1});
  for (double t : {-1.2, 0.1, 0.9})
    for (double d : {1e-9, 1e-3, 0.4}) CHECK(pot.delta_W(t, d) == doctest::Approx(pot.W(t + d) - pot.W(t)).epsilon(1e-9));
}

TEST_CASE("condition report") {
  auto rep = validate_conditions(make_quartic());
  CHECK(rep.all_passed());
  CHECK(rep.best_C <= 2.0);
  CHECK(rep.sample_lo == -3.0);
  CHECK(rep.sample_hi == 3.0);
  // 8 - 1 <= C |W'(2)| and |W'(2)| <= C (8 + 1)
  CHECK((8.0 - 1.0) / rep.best_C <= 6.0);
  CHECK(6.0 <= rep.best_C * 9.0);

  auto single = validate_conditions(make_polynomial({0, 0, 1}));
  CHECK_FALSE(single.all_passed());
  CHECK_FALSE(single.checks[0].passed);

  auto four = make_polynomial({1, 0, -2, 0, 1});
  REQUIRE(four.wells().size() == 2);
  CHECK(four.wells()[0] == doctest::Approx(-1.0));
  auto rep4 = validate_conditions(four, -3, 3);
  CHECK(rep4.all_passed());
  CHECK(four.growth_exponent() == 4);

  auto neg = validate_conditions(make_polynomial({-0.1, 0, 1}));
  CHECK_FALSE(neg.all_passed());
}

TEST_CASE("companion roots") {
  auto r = real_roots({-6, 11, -6, 1});
  REQUIRE(r.size() == 3);
  CHECK(r[0] == doctest::Approx(1));
  CHECK(r[2] == doctest::Approx(3));
}
