#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

namespace fracac::detail {

template <int N, class F>
double gl(F&& f, double a, double b) {
  return boost::math::quadrature::gauss<double, N>::integrate(f, a, b);
}

// Runtime order selection; boost ships tabulated nodes for these sizes.
template <class F>
double gl_order(F&& f, double a, double b, int order) {
  if (order <= 7) return gl<7>(f, a, b);
  if (order <= 10) return gl<10>(f, a, b);
  if (order <= 15) return gl<15>(f, a, b);
  if (order <= 20) return gl<20>(f, a, b);
  return gl<30>(f, a, b);
}

using Rule = std::vector<std::pair<double, double>>;  // (node, weight)

template <int N>
void append_gl(Rule& rule, double a, double b) {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto& x = G::abscissa();
  const auto& w = G::weights();
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] == 0.0) {
      rule.emplace_back(mid, half * w[k]);
    } else {
      rule.emplace_back(mid - half * x[k], half * w[k]);
      rule.emplace_back(mid + half * x[k], half * w[k]);
    }
  }
}

// Composite rule on [a, b]. Every piece between breakpoints is halved and each
// half is graded geometrically toward its outer end, so kinks at breakpoints
// are resolved.
inline Rule graded_rule(double a, double b, std::vector<double> breaks, int levels) {
  breaks.push_back(a);
  breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  Rule rule;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double lo = std::max(a, breaks[k]);
    const double hi = std::min(b, breaks[k + 1]);
    if (!(hi - lo > 1e-14 * (b - a))) continue;
    const double mid = 0.5 * (lo + hi);
    double x0 = mid;
    for (int l = 0; l < levels; ++l) {
      const double x1 = lo + 0.5 * (x0 - lo);
      append_gl<10>(rule, x1, x0);
      x0 = x1;
    }
    append_gl<10>(rule, lo, x0);
    x0 = mid;
    for (int l = 0; l < levels; ++l) {
      const double x1 = hi - 0.5 * (hi - x0);
      append_gl<10>(rule, x0, x1);
      x0 = x1;
    }
    append_gl<10>(rule, x0, hi);
  }
  return rule;
}

// Tensor rule over [x0,x1]x[y0,y1] split into `split`^2 subsquares.
template <class F>
double tensor(F&& f, double x0, double x1, double y0, double y1, int order, int split = 1) {
  const double dx = (x1 - x0) / split, dy = (y1 - y0) / split;
  double total = 0.0;
  for (int a = 0; a < split; ++a) {
    for (int b = 0; b < split; ++b) {
      const double xa = x0 + a * dx, ya = y0 + b * dy;
      total += gl_order([&](double x) { return gl_order([&](double y) { return f(x, y); }, ya, ya + dy, order); },
                        xa, xa + dx, order);
    }
  }
  return total;
}

}  // namespace fracac::detail
