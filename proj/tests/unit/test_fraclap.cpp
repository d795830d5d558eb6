#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>
#include <sstream>

#include "fracac/errors.hpp"
#include "fracac/fraclap.hpp"

using namespace fracac;

namespace {

std::size_t node_at(const Domain& dom, double x, double y = 0.0) {
  const auto& c = dom.ctx;
  const int i = static_cast<int>(std::lround((x + c.R) / c.h));
  const int j = c.n == 2 ? static_cast<int>(std::lround((y + c.R) / c.h)) : 0;
  return c.index(i, j);
}

// c_{1,s} ∫_0^∞ (2u(x) - u(x+r) - u(x-r)) r^{-1-2s} dr for u = exp(-x^2)
double gaussian_oracle(double x, double s) {
  auto u = [](double t) { return std::exp(-t * t); };
  auto integrand = [&](double r) {
    if (r < 1e-4) {
      // even Taylor terms of the second difference
      const double u2 = (4 * x * x - 2) * u(x);
      const double u4 = (16 * x * x * x * x - 48 * x * x + 12) * u(x);
      return (-u2 * r * r - u4 * r * r * r * r / 12.0) * std::pow(r, -1 - 2 * s);
    }
    return (2 * u(x) - u(x + r) - u(x - r)) * std::pow(r, -1 - 2 * s);
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  double v = 0.0;
  const double cuts[] = {0.0, 1e-4, 0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
  for (int k = 0; k + 1 < 9; ++k) v += GK::integrate(integrand, cuts[k], cuts[k + 1], 15, 1e-14);
  v += 2 * u(x) * std::pow(16.0, -2 * s) / (2 * s);
  return normalization_constant(1, s) * v;
}

}  // namespace

TEST_CASE("constant annihilation with tail") {
  auto dom = build_context(1, 0.25, 0.01, 8.0, Interval{-1, 1});
  FracOperator op(dom);
  auto u = GridFunction::constant(dom, 7.0);
  for (double v : op.apply_all(u).values) CHECK(std::abs(v) < 1e-12);
  CHECK(op.sobolev_energy(u) == 0.0);

  auto dom2 = build_context(2, 0.3, 0.1, 2.0, Disc{0, 0, 0.4});
  FracOperator op2(dom2);
  auto u2 = GridFunction::constant(dom2, -3.0);
  for (double v : op2.apply_all(u2).values) CHECK(std::abs(v) < 1e-12);
  // sectored tail with equal values
  auto u3 = GridFunction(dom2, std::vector<double>(dom2->ctx.size(), 2.0), ExteriorTail::halfplane(0.3, 2.0, 2.0));
  for (double v : op2.apply_all(u3).values) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("weights symmetric, positive and M-matrix structure") {
  auto dom = build_context(2, 0.25, 0.1, 2.0, Rectangle{-0.3, 0.3, -0.2, 0.2});
  FracOperator op(dom);
  const auto& c = dom->ctx;
  for (int dx = -3; dx <= 3; ++dx)
    for (int dy = -3; dy <= 3; ++dy) {
      if (!dx && !dy) continue;
      const std::size_t a = c.index(20, 20), b = c.index(20 + dx, 20 + dy);
      CHECK(op.weight(a, b) > 0.0);
      CHECK(op.weight(a, b) == op.weight(b, a));
      CHECK(op.weight(a, b) == op.weight(c.index(20, 20), c.index(20 - dx, 20 - dy)));
    }
  auto g = GridFunction::constant(dom, 1.0);
  auto sys = op.interior_system(g);
  for (Eigen::Index r = 0; r < sys.matrix.rows(); ++r)
    for (Eigen::Index q = 0; q < sys.matrix.cols(); ++q) {
      if (r == q) CHECK(sys.matrix(r, q) >= 0.0);
      else CHECK(sys.matrix(r, q) <= 0.0);
    }
}

TEST_CASE("2D weights against tensor Gauss oracle") {
  // ω(d) = ∫∫_{[0,1]^2 x [0,1]^2} |a - b + d|^{-2-2s}, far enough to be smooth
  auto dom = build_context(2, 0.25, 1.0, 20.0, Disc{0, 0, 2.0});
  FracOperator op(dom);
  const auto& c = dom->ctx;
  using G = boost::math::quadrature::gauss<double, 20>;
  for (auto [dx, dy] : {std::pair{3, 1}, std::pair{5, 0}, std::pair{2, 2}}) {
    auto pyramid = [&](double t1, double t2) {
      const double l = std::max(0.0, 1 - std::abs(t1 - dx)) * std::max(0.0, 1 - std::abs(t2 - dy));
      return l * std::pow(t1 * t1 + t2 * t2, -1.0 - 0.25);
    };
    double ref = 0.0;
    for (int k : {dx - 1, dx})
      for (int l : {dy - 1, dy})
        ref += G::integrate([&](double a) { return G::integrate([&](double b) { return pyramid(a, b); }, l, l + 1); }, k, k + 1);
    const double w = op.weight(c.index(20, 20), c.index(20 + dx, 20 + dy));
    CHECK(w == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("spectral symbol for cos(kx)") {
  for (double s : {0.1, 0.25}) {
    auto dom = build_context(1, s, 0.01, 60.0, Interval{-1, 1});
    FracOperator op(dom);
    for (double k : {1.0, 2.0}) {
      auto u = GridFunction::sample(dom, [&](const Point& p) { return std::cos(k * p[0]); }, ExteriorTail::constant(1, 0.0));
      for (double x : {-0.5, 0.0, 0.3}) {
        const double got = op.apply_pointwise(u, node_at(*dom, x));
        CHECK(std::abs(got - std::pow(k, 2 * s) * std::cos(k * x)) < 1e-3 * std::max(1.0, std::pow(k, 2 * s)));
      }
    }
  }
}

TEST_CASE("gaussian against adaptive quadrature") {
  const double s = 0.25;
  auto dom = build_context(1, s, 0.002, 10.0, Interval{-2.5, 2.5});
  FracOperator op(dom);
  auto u = GridFunction::sample(dom, [](const Point& p) { return std::exp(-p[0] * p[0]); }, ExteriorTail::constant(1, 0.0));
  const auto all = op.apply_all(u);
  for (double x : {-1.5, -0.4, 0.0, 0.7, 2.0}) {
    const double ref = gaussian_oracle(x, s);
    const std::size_t node = node_at(*dom, x);
    CHECK(std::abs(op.apply_pointwise(u, node) - ref) < 1e-4);
    CHECK(all.values[static_cast<std::size_t>(dom->interior_slot[node])] == op.apply_pointwise(u, node));
  }
}

TEST_CASE("linearity, pairing, duality and energy") {
  auto dom = build_context(1, 0.3, 0.01, 6.0, Interval{-1, 1});
  FracOperator op(dom);
  auto bump = [](double x, double c, double w) {
    const double r = (x - c) / w;
    return std::abs(r) < 1 ? std::exp(1 - 1 / (1 - r * r)) : 0.0;
  };
  auto u = GridFunction::sample(dom, [&](const Point& p) { return bump(p[0], 0.1, 0.7); }, ExteriorTail::constant(1, 0));
  auto v = GridFunction::sample(dom, [&](const Point& p) { return std::sin(2 * p[0]) * bump(p[0], -0.2, 0.6); },
                                ExteriorTail::constant(1, 0));
  auto phi = GridFunction::sample(dom, [&](const Point& p) { return bump(p[0], 0.0, 0.9) * (1 + p[0]); },
                                  ExteriorTail::constant(1, 0));
  const auto& d = *dom;
  std::vector<double> comb(d.ctx.size());
  for (std::size_t i = 0; i < comb.size(); ++i) comb[i] = 2.5 * u[i] - 1.5 * v[i];
  auto w = GridFunction(dom, comb, ExteriorTail::constant(1, 0));
  auto Lu = op.apply_all(u), Lv = op.apply_all(v), Lw = op.apply_all(w);
  for (std::size_t k = 0; k < Lu.values.size(); ++k) CHECK(std::abs(Lw.values[k] - (2.5 * Lu.values[k] - 1.5 * Lv.values[k])) < 1e-10);

  CHECK(op.pairing(u, GridFunction::constant(dom, 0.0)) == 0.0);
  CHECK(std::abs(op.pairing(u, v) - op.pairing(v, u)) < 1e-10);
  double dual = 0.0;
  for (std::size_t k = 0; k < d.interior.size(); ++k) dual += Lu.values[k] * phi[d.interior[k]] * d.ctx.h;
  const double pr = op.pairing(u, phi);
  CHECK(std::abs(pr - dual) <= 1e-3 * std::abs(dual));

  std::vector<double> twice(d.ctx.size());
  for (std::size_t i = 0; i < twice.size(); ++i) twice[i] = 2 * u[i];
  CHECK(op.sobolev_energy(GridFunction(dom, twice, ExteriorTail::constant(1, 0))) ==
        doctest::Approx(4 * op.sobolev_energy(u)).epsilon(1e-10));
  CHECK(op.sobolev_energy(u) > 0);

  CHECK_THROWS_AS(op.pairing(u, u.domain().exterior.empty() ? u : GridFunction::constant(dom, 1.0)), PreconditionError);
  CHECK_THROWS_AS(op.apply_pointwise(u, 0), PreconditionError);
}

TEST_CASE("missing tail is rejected unless the ring is constant") {
  auto dom = build_context(1, 0.25, 0.05, 4.0, Interval{-1, 1});
  FracOperator op(dom);
  auto ramp = GridFunction::sample(dom, [](const Point& p) { return p[0]; });
  CHECK_THROWS_AS(op.apply_all(ramp), PreconditionError);
  auto flat = GridFunction::constant(dom, 3.0, false);
  for (double v : op.apply_all(flat).values) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("fractional Poincare constant is positive") {
  auto dom = build_context(1, 0.25, 0.02, 6.0, Interval{-1, 1});
  FracOperator op(dom);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> N01;
  double cmin = 1e300;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> v(dom->ctx.size(), 0.0);
    double l2 = 0.0;
    for (std::size_t i : dom->interior) {
      v[i] = N01(rng);
      l2 += v[i] * v[i] * dom->ctx.h;
    }
    auto f = GridFunction(dom, v, ExteriorTail::constant(1, 0));
    cmin = std::min(cmin, op.pairing(f, f) / l2);
  }
  MESSAGE("empirical Poincare constant " << cmin);
  CHECK(cmin > 0.0);
}

TEST_CASE("2D near refinement is stable for Lipschitz fields") {
  auto dom = build_context(2, 0.25, 0.1, 2.0, Disc{0, 0, 0.4});
  FracOperator coarse(dom, {10, false});
  FracOperator fine(dom, {20, false});
  auto u = GridFunction::sample(dom, [](const Point& p) { return std::exp(-(p[0] * p[0] + 2 * p[1] * p[1])); },
                                ExteriorTail::constant(2, 0.0));
  for (std::size_t i : dom->interior) CHECK(std::abs(coarse.apply_pointwise(u, i) - fine.apply_pointwise(u, i)) < 1e-6);
}

TEST_CASE("stencil dump") {
  auto dom = build_context(1, 0.25, 0.5, 4.0, Interval{-1, 1});
  FracOperator op(dom);
  std::ostringstream os;
  op.dump_stencil(os, 8);
  const std::string s = os.str();
  CHECK(s.rfind("kind,x,y,weight", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 1 + 16 + 2);
}
