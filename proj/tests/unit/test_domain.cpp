#include <doctest.h>

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <sstream>

#include "fracac/domain.hpp"
#include "fracac/errors.hpp"

using namespace fracac;

namespace {

double gamma_ratio_oracle(int n, double s) {
  using mp = boost::multiprecision::cpp_bin_float_50;
  const mp S(s);
  const mp pi = boost::math::constants::pi<mp>();
  const mp v = pow(mp(4), S) * tgamma(mp(n) / 2 + S) / (pow(pi, mp(n) / 2) * abs(tgamma(-S)));
  return static_cast<double>(v);
}

}  // namespace

TEST_CASE("1D grid arithmetic") {
  auto dom = build_context(1, 0.25, 0.01, 8.0, Interval{-1.0, 1.0});
  CHECK(dom->ctx.size() == 1601);
  CHECK(dom->interior.size() == 199);
  CHECK(dom->interior.size() + dom->exterior.size() == dom->ctx.size());
  CHECK(dom->ctx.coord(0)[0] == doctest::Approx(-8.0));
  CHECK(dom->ctx.coord(700)[0] == -1.0);
  CHECK(dom->boundary_nodes.size() == 2);
}

TEST_CASE("context validation") {
  CHECK_THROWS_AS(build_context(1, 0.6, 0.01, 8.0, Interval{-1, 1}), ConfigError);
  CHECK_THROWS_AS(build_context(1, 0.5, 0.01, 8.0, Interval{-1, 1}), ConfigError);
  CHECK_THROWS_AS(build_context(1, 0.0, 0.01, 8.0, Interval{-1, 1}), ConfigError);
  CHECK_THROWS_AS(build_context(1, 0.25, -0.01, 8.0, Interval{-1, 1}), ConfigError);
  CHECK_THROWS_AS(build_context(1, 0.25, 0.03, 8.0, Interval{-1, 1}), ConfigError);
  // margin of 1.5 diam fails
  CHECK_THROWS_AS(build_context(1, 0.25, 0.01, 3.0, Interval{-1, 1}), ConfigError);
  CHECK_THROWS_AS(build_context(2, 0.25, 0.1, 8.0, Interval{-1, 1}), ConfigError);
  try {
    build_context(1, 0.7, 0.01, 8.0, Interval{-1, 1});
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("s out of range") != std::string::npos);
    CHECK(e.field() == "s");
  }
}

TEST_CASE("2D disc node count against brute-force lattice count") {
  const double h = 0.05;
  auto dom = build_context(2, 0.2, h, 4.0, Disc{0, 0, 1});
  long brute = 0;
  for (int i = -80; i <= 80; ++i)
    for (int j = -80; j <= 80; ++j)
      if (i * i + j * j < 400) ++brute;  // (ih)^2 + (jh)^2 < 1 with h = 1/20
  CHECK(static_cast<long>(dom->interior.size()) == brute);
  const double expect = M_PI / (h * h);
  CHECK(std::abs(dom->interior.size() - expect) / expect < 0.02);
}

TEST_CASE("normalization constant against 50-digit gamma") {
  for (int n : {1, 2})
    for (double s : {0.1, 0.25, 0.4, 0.49}) {
      const double c = normalization_constant(n, s);
      CHECK(c > 0.0);
      CHECK(std::abs(c - gamma_ratio_oracle(n, s)) <= 1e-12 * gamma_ratio_oracle(n, s));
    }
  // (1-2s) c stays bounded as s -> 1/2
  const double near = normalization_constant(1, 0.49) * (1 - 0.98);
  CHECK(std::isfinite(near));
  CHECK(normalization_constant(1, 0.25) == doctest::Approx(0.1995).epsilon(1e-3));
}

TEST_CASE("impose_exterior") {
  auto dom = build_context(1, 0.25, 0.01, 8.0, Interval{-1.0, 1.0});
  auto zero = GridFunction::constant(dom, 0.0);
  auto one = GridFunction::constant(dom, 1.0);
  auto r = impose_exterior(zero, one);
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(r[i] == (dom->in_omega(i) ? 0.0 : 1.0));
  REQUIRE(r.tail());
  CHECK(r.tail()->values[0] == 1.0);

  auto u = GridFunction::sample(dom, [](const Point& p) { return std::sin(3 * p[0]); });
  auto same = impose_exterior(u, u);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(same[i] == u[i]);

  auto sign = GridFunction::sample(
      dom, [](const Point& p) { return p[0] > 0 ? 1.0 : -1.0; }, ExteriorTail::sides(-1, 1));
  auto plug = impose_exterior(zero, sign);
  double l1 = 0;
  for (std::size_t i : dom->exterior) l1 += std::abs(plug[i] - (dom->ctx.coord(i)[0] > 0 ? 1.0 : -1.0));
  CHECK(l1 == 0.0);
  auto twice = impose_exterior(plug, sign);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(twice[i] == plug[i]);

  auto other = build_context(1, 0.25, 0.02, 8.0, Interval{-1.0, 1.0});
  CHECK_THROWS_AS(impose_exterior(GridFunction::constant(other, 0.0), one), ConfigError);
}

TEST_CASE("enclosed volume converges under refinement") {
  double prev_err = 1e9;
  for (double h : {0.1, 0.05, 0.025}) {
    auto dom = build_context(2, 0.25, h, 4.0, Rectangle{-0.5, 0.7, -0.3, 0.3});
    const double vol = dom->interior.size() * h * h;
    const double err = std::abs(vol - 1.2 * 0.6);
    CHECK(err <= 4.0 * h);
    CHECK(err <= prev_err + 1e-12);
    prev_err = err;
  }
}

TEST_CASE("tail sectors") {
  auto t = ExteriorTail::halfplane(M_PI / 2, 1.0, -1.0);  // +1 above the x axis
  CHECK(t.value_at({0.0, 5.0}, 2) == 1.0);
  CHECK(t.value_at({0.0, -5.0}, 2) == -1.0);
  CHECK(t.value_at({3.0, 0.1}, 2) == 1.0);
  auto t1 = ExteriorTail::sides(-1, 1);
  CHECK(t1.value_at({-9, 0}, 1) == -1);
  CHECK(t1.value_at({9, 0}, 1) == 1);
  CHECK_THROWS_AS(ExteriorTail({}, {1.0}).validate(1), ConfigError);
}

TEST_CASE("csv round trip") {
  auto dom = build_context(1, 0.25, 0.1, 4.0, Interval{-1.0, 1.0});
  auto u = GridFunction::sample(dom, [](const Point& p) { return p[0] * p[0]; });
  std::ostringstream os;
  write_csv(os, u);
  const std::string text = os.str();
  CHECK(text.rfind("x,value\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 82);
}
