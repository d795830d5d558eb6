#include "kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fracac/errors.hpp"
#include "fracac/parallel.hpp"
#include "quadrature.hpp"

namespace fracac::detail {

namespace {

constexpr double kPi = std::numbers::pi;

double cross(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

// ∫ over [0,1]^2 of Λ(sx a, sy b) |(a,b)|^{-2-2s}, with Λ bilinear and zero at
// the origin. Polar coordinates: Λ = βρ + γρ² along each ray, so the radial
// integral is closed form.
template <class Lam>
double corner_square(Lam&& lam, double sx, double sy, double s, int order) {
  auto ray = [&](double th, double L) {
    const double c = std::cos(th), sn = std::sin(th);
    const double lf = lam(sx * L * c, sy * L * sn);
    const double lh = lam(0.5 * sx * L * c, 0.5 * sy * L * sn);
    const double gamma = 2.0 * (lf - 2.0 * lh) / (L * L);
    const double beta = (lf - gamma * L * L) / L;
    return beta * std::pow(L, 1.0 - 2.0 * s) / (1.0 - 2.0 * s) + gamma * std::pow(L, 2.0 - 2.0 * s) / (2.0 - 2.0 * s);
  };
  const double t1 = gl_order([&](double th) { return ray(th, 1.0 / std::cos(th)); }, 0.0, 0.25 * kPi, order);
  const double t2 = gl_order([&](double th) { return ray(th, 1.0 / std::sin(th)); }, 0.25 * kPi, 0.5 * kPi, order);
  return t1 + t2;
}

double square_distance(double x0, double x1, double y0, double y1) {
  const double dx = std::max({x0, 0.0, -x1});
  const double dy = std::max({y0, 0.0, -y1});
  return std::hypot(dx, dy);
}

}  // namespace

double omega_1d(long d, double s) {
  if (d < 0) d = -d;
  if (d == 0) throw PreconditionError("omega_1d: zero offset is excluded");
  const double p = 1.0 - 2.0 * s;
  const double denom = -2.0 * s * p;
  if (d == 1) return (std::pow(2.0, p) - 2.0) / denom;
  // second difference of |t|^p written to avoid cancellation at large d
  const double dd = static_cast<double>(d);
  const double inv = 1.0 / dd;
  return std::pow(dd, p) * (std::expm1(p * std::log1p(inv)) + std::expm1(p * std::log1p(-inv))) / denom;
}

double omega_2d(int dx, int dy, double s, int near_order) {
  if (dx == 0 && dy == 0) throw PreconditionError("omega_2d: zero offset is excluded");
  const double e = -2.0 - 2.0 * s;
  auto lam = [&](double a, double b) {
    return std::max(0.0, 1.0 - std::abs(a - dx)) * std::max(0.0, 1.0 - std::abs(b - dy));
  };
  auto integrand = [&](double a, double b) { return lam(a, b) * std::pow(a * a + b * b, 0.5 * e); };
  double total = 0.0;
  for (int k : {dx - 1, dx}) {
    for (int l : {dy - 1, dy}) {
      const bool corner = (k == 0 || k == -1) && (l == 0 || l == -1);
      if (corner) {
        total += corner_square(lam, k == 0 ? 1.0 : -1.0, l == 0 ? 1.0 : -1.0, s, near_order);
        continue;
      }
      const double dist = square_distance(k, k + 1, l, l + 1);
      if (dist < 2.0)
        total += tensor(integrand, k, k + 1, l, l + 1, near_order, 2);
      else if (dist < 8.0)
        total += tensor(integrand, k, k + 1, l, l + 1, 10);
      else
        total += tensor(integrand, k, k + 1, l, l + 1, 7);
    }
  }
  return total;
}

WeightTable::WeightTable(const FracContext& ctx, int near_order) : near_order_(near_order) {
  const std::size_t m = static_cast<std::size_t>(ctx.side);
  const double scale = std::pow(ctx.h, -2.0 * ctx.s);
  if (ctx.n == 1) {
    stride_ = 0;
    w_.assign(m, 0.0);
    for (std::size_t d = 1; d < m; ++d) w_[d] = scale * omega_1d(static_cast<long>(d), ctx.s);
    return;
  }
  stride_ = m;
  w_.assign(m * m, 0.0);
  // fill the dx >= dy half, mirror the rest
  parallel_for(m, [&](std::size_t b, std::size_t e) {
    for (std::size_t dx = b; dx < e; ++dx)
      for (std::size_t dy = 0; dy <= dx; ++dy) {
        if (dx == 0 && dy == 0) continue;
        w_[dx + m * dy] = scale * omega_2d(static_cast<int>(dx), static_cast<int>(dy), ctx.s, near_order);
      }
  });
  for (std::size_t dx = 0; dx < m; ++dx)
    for (std::size_t dy = dx + 1; dy < m; ++dy) w_[dx + m * dy] = w_[dy + m * dx];
}

std::vector<double> tail_coefficients(const FracContext& ctx, const ExteriorTail& layout, const Point& x,
                                      bool cell_average) {
  const double s = ctx.s;
  const double L = ctx.extended_half_width();
  if (ctx.n == 1) {
    const double p = 1.0 - 2.0 * s;
    auto one_side = [&](double D) {
      if (cell_average) {
        const double lo = std::max(0.0, D - 0.5 * ctx.h);
        return (std::pow(D + 0.5 * ctx.h, p) - std::pow(lo, p)) / (2.0 * s * p * ctx.h);
      }
      return std::pow(D, -2.0 * s) / (2.0 * s);
    };
    return {one_side(x[0] + L), one_side(L - x[0])};
  }

  const std::size_t K = layout.sector_count(2);
  std::vector<double> cut_angles;
  if (K > 1) cut_angles = layout.cuts;
  const Point& ctr = layout.center;
  const double rx = x[0] - ctr[0], ry = x[1] - ctr[1];

  std::vector<double> breaks;
  for (double cx : {-L, L})
    for (double cy : {-L, L}) breaks.push_back(std::atan2(cy - x[1], cx - x[0]));
  for (double phi : cut_angles) {
    breaks.push_back(phi);
    breaks.push_back(phi + kPi);
    // where the sector ray leaves the box
    const double c = std::cos(phi), sn = std::sin(phi);
    double t = std::numeric_limits<double>::infinity();
    if (c > 0.0) t = std::min(t, (L - ctr[0]) / c);
    if (c < 0.0) t = std::min(t, (-L - ctr[0]) / c);
    if (sn > 0.0) t = std::min(t, (L - ctr[1]) / sn);
    if (sn < 0.0) t = std::min(t, (-L - ctr[1]) / sn);
    breaks.push_back(std::atan2(ctr[1] + t * sn - x[1], ctr[0] + t * c - x[0]));
  }
  for (double& b : breaks) {
    b = std::fmod(b, 2.0 * kPi);
    if (b < 0.0) b += 2.0 * kPi;
  }
  const Rule rule = graded_rule(0.0, 2.0 * kPi, breaks, 6);

  std::vector<double> out(K, 0.0);
  std::vector<double> cross_r;
  for (const auto& [th, wt] : rule) {
    const double c = std::cos(th), sn = std::sin(th);
    double r1 = std::numeric_limits<double>::infinity();
    if (c > 0.0) r1 = std::min(r1, (L - x[0]) / c);
    if (c < 0.0) r1 = std::min(r1, (-L - x[0]) / c);
    if (sn > 0.0) r1 = std::min(r1, (L - x[1]) / sn);
    if (sn < 0.0) r1 = std::min(r1, (-L - x[1]) / sn);
    r1 = std::max(r1, 0.0);
    auto piece = [&](double ra, double rb) {
      const double a = std::pow(ra, -2.0 * s);
      const double b = std::isinf(rb) ? 0.0 : std::pow(rb, -2.0 * s);
      return (a - b) / (2.0 * s);
    };
    if (K == 1) {
      out[0] += wt * piece(r1, std::numeric_limits<double>::infinity());
      continue;
    }
    cross_r.clear();
    for (double phi : cut_angles) {
      const double pc = std::cos(phi), ps = std::sin(phi);
      const double den = cross(c, sn, pc, ps);
      if (std::abs(den) < 1e-300) continue;
      const double r = cross(pc, ps, rx, ry) / den;
      if (!(r > r1)) continue;
      const double t = (rx + r * c) * pc + (ry + r * sn) * ps;
      if (t > 0.0) cross_r.push_back(r);
    }
    std::sort(cross_r.begin(), cross_r.end());
    double ra = r1;
    for (std::size_t q = 0; q <= cross_r.size(); ++q) {
      const bool last = q == cross_r.size();
      const double rb = last ? std::numeric_limits<double>::infinity() : cross_r[q];
      const double rm = last ? 2.0 * ra + 1.0 : 0.5 * (ra + rb);
      const std::size_t k = layout.sector_of({x[0] + rm * c, x[1] + rm * sn}, 2);
      out[k] += wt * piece(ra, rb);
      ra = rb;
    }
  }
  return out;
}

double edge_cell_integral_1d(double offset_cells, double s, double h) {
  const double d = std::abs(offset_cells);
  if (d < 1.0 - 1e-12) throw PreconditionError("edge_cell_integral_1d: cell touches the edge point");
  const double a = (d - 0.5) * h, b = (d + 0.5) * h;
  return (std::pow(a, -2.0 * s) - std::pow(b, -2.0 * s)) / (2.0 * s);
}

EdgeCellTable::EdgeCellTable(const FracContext& ctx, int order) {
  if (ctx.n != 2) throw PreconditionError("EdgeCellTable is 2D only");
  const std::size_t m = static_cast<std::size_t>(ctx.side) + 1;
  stride_ = m;
  w_.assign(m * m, 0.0);
  const double e = -2.0 - 2.0 * ctx.s;
  const double scale = std::pow(ctx.h, -2.0 * ctx.s);
  auto integrand = [&](double a, double b) { return std::pow(a * a + b * b, 0.5 * e); };
  parallel_for(m, [&](std::size_t b0, std::size_t e0) {
    for (std::size_t i = b0; i < e0; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        if (i == 0 && j == 0) continue;  // the two mirror cells cancel
        const double x0 = static_cast<double>(i), x1 = x0 + 1.0;
        const double y0 = static_cast<double>(j) - 0.5, y1 = y0 + 1.0;
        const double dist = square_distance(x0, x1, y0, y1);
        double v;
        if (dist < 2.0)
          v = tensor(integrand, x0, x1, y0, y1, order, 4);
        else if (dist < 8.0)
          v = tensor(integrand, x0, x1, y0, y1, 10);
        else
          v = tensor(integrand, x0, x1, y0, y1, 7);
        w_[i + m * j] = scale * v;
      }
  });
}

}  // namespace fracac::detail
