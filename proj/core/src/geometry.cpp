#include "fracac/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <tuple>

#include "fracac/errors.hpp"
#include "fracac/fraclap.hpp"
#include "fracac/parallel.hpp"
#include "kernel.hpp"
#include "sum.hpp"

namespace fracac {

namespace {

std::vector<Point> edge_points(const std::vector<BoundaryEdge>& edges) {
  std::vector<Point> pts;
  pts.reserve(edges.size());
  for (const auto& e : edges) pts.push_back(e.at);
  return pts;
}

void attach_edge_interface(PhaseSet& E) {
  E.interface.points = edge_points(boundary_edges(E));
  E.empty_interface = E.interface.points.empty();
}

// 2D edge tables are costly to build; share them per discretization.
const detail::EdgeCellTable& edge_table(const FracContext& ctx) {
  static std::mutex mu;
  static std::map<std::tuple<double, double, int>, std::unique_ptr<detail::EdgeCellTable>> cache;
  std::lock_guard lk(mu);
  auto& slot = cache[{ctx.s, ctx.h, ctx.side}];
  if (!slot) slot = std::make_unique<detail::EdgeCellTable>(ctx, 20);
  return *slot;
}

int sign_of(double v) { return v > 0.0 ? 1 : -1; }

}  // namespace

PhaseSet PhaseSet::from_predicate(DomainPtr dom, const std::function<bool(const Point&)>& in_E, ExteriorTail tail) {
  tail.validate(dom->ctx.n);
  for (double v : tail.values)
    if (v != 1.0 && v != -1.0) throw ConfigError("tail", "phase tails must be +1 or -1");
  PhaseSet E;
  E.label.resize(dom->ctx.size());
  for (std::size_t i = 0; i < E.label.size(); ++i) E.label[i] = in_E(dom->ctx.coord(i)) ? 1 : -1;
  E.dom = std::move(dom);
  E.tail = std::move(tail);
  attach_edge_interface(E);
  return E;
}

PhaseSet PhaseSet::from_interval(DomainPtr dom, double a, double b) {
  if (dom->ctx.n != 1) throw ConfigError("phase", "intervals are 1D sets");
  if (!(b > a)) throw ConfigError("phase", "empty interval");
  const double tol = 1e-9 * dom->ctx.h;
  const ExteriorTail tail = ExteriorTail::sides(std::isinf(a) ? 1.0 : -1.0, std::isinf(b) ? 1.0 : -1.0);
  return from_predicate(
      std::move(dom), [&](const Point& p) { return p[0] >= a - tol && p[0] < b - tol; }, tail);
}

PhaseSet PhaseSet::complement() const {
  PhaseSet c = *this;
  for (auto& l : c.label) l = static_cast<signed char>(-l);
  for (double& v : c.tail.values) v = -v;
  attach_edge_interface(c);
  return c;
}

GridFunction PhaseSet::indicator_field() const {
  std::vector<double> v(label.begin(), label.end());
  return GridFunction(dom, std::move(v), tail);
}

Partition Partition::nearest_well(const GridFunction& u, const std::vector<double>& wells) {
  if (wells.empty()) throw ConfigError("wells", "no wells given");
  auto nearest = [&](double t) {
    double best = wells.front();
    for (double a : wells)
      if (std::abs(t - a) < std::abs(t - best)) best = a;
    return best;
  };
  Partition P;
  P.dom = u.domain_ptr();
  P.labels.reserve(u.size());
  for (double v : u.values()) P.labels.push_back(nearest(v));
  if (u.tail()) {
    P.tail = *u.tail();
  } else {
    P.tail = ExteriorTail::constant(u.domain().ctx.n, u[0]);
  }
  for (double& v : P.tail.values) v = nearest(v);
  return P;
}

GridFunction Partition::field() const { return GridFunction(dom, labels, tail); }

PhaseSet extract_interface(const GridFunction& u, double delta) {
  const auto& dom = u.domain();
  const auto& c = dom.ctx;
  PhaseSet E;
  E.dom = u.domain_ptr();
  E.label.resize(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) E.label[i] = static_cast<signed char>(sign_of(u[i] - delta));
  if (u.tail()) {
    E.tail = *u.tail();
  } else {
    E.tail = ExteriorTail::constant(c.n, u[0]);
  }
  for (double& v : E.tail.values) v = sign_of(v - delta);

  if (c.n == 1) {
    for (int i = 0; i + 1 < c.side; ++i) {
      const double a = u[static_cast<std::size_t>(i)] - delta, b = u[static_cast<std::size_t>(i + 1)] - delta;
      const double x = c.coord(static_cast<std::size_t>(i))[0];
      if (a == 0.0) {
        E.interface.points.push_back({x, 0.0});
      } else if ((a > 0.0) != (b > 0.0) && b != 0.0) {
        E.interface.points.push_back({x + c.h * a / (a - b), 0.0});
      }
    }
  } else {
    auto cross = [&](std::size_t p, std::size_t q) {
      const double a = u[p] - delta, b = u[q] - delta;
      const Point P = c.coord(p), Q = c.coord(q);
      const double t = a / (a - b);
      return Point{P[0] + t * (Q[0] - P[0]), P[1] + t * (Q[1] - P[1])};
    };
    for (int j = 0; j + 1 < c.side; ++j)
      for (int i = 0; i + 1 < c.side; ++i) {
        const std::size_t v00 = c.index(i, j), v10 = c.index(i + 1, j), v11 = c.index(i + 1, j + 1),
                          v01 = c.index(i, j + 1);
        const bool b00 = u[v00] > delta, b10 = u[v10] > delta, b11 = u[v11] > delta, b01 = u[v01] > delta;
        if (b00 == b10 && b10 == b11 && b11 == b01) continue;
        std::vector<Point> pts;
        if (b00 != b10) pts.push_back(cross(v00, v10));
        if (b10 != b11) pts.push_back(cross(v10, v11));
        if (b11 != b01) pts.push_back(cross(v11, v01));
        if (b01 != b00) pts.push_back(cross(v01, v00));
        if (pts.size() == 2) {
          E.interface.segments.push_back({pts[0], pts[1]});
        } else if (pts.size() == 4) {
          // saddle: connect according to the centre value
          const double centre = 0.25 * (u[v00] + u[v10] + u[v11] + u[v01]) - delta;
          if ((centre > 0.0) == b00) {
            E.interface.segments.push_back({pts[0], pts[1]});
            E.interface.segments.push_back({pts[2], pts[3]});
          } else {
            E.interface.segments.push_back({pts[0], pts[3]});
            E.interface.segments.push_back({pts[1], pts[2]});
          }
        }
      }
    for (const auto& seg : E.interface.segments) {
      E.interface.points.push_back(seg[0]);
      E.interface.points.push_back({0.5 * (seg[0][0] + seg[1][0]), 0.5 * (seg[0][1] + seg[1][1])});
    }
  }
  E.empty_interface = E.interface.points.empty();
  return E;
}

double perimeter_occupancy(const PhaseSet& E, const std::vector<double>& theta, const FracOperator& op,
                           const Region& region) {
  const auto& dom = op.domain();
  if (!same_discretization(*E.dom, dom)) throw ConfigError("phase", "set and operator use different grids");
  if (theta.size() != dom.ctx.size()) throw ConfigError("phase", "occupancy size mismatch");
  if (region.kind == Region::Kind::whole && !E.tail.is_constant())
    throw PreconditionError("perimeter over the whole space is infinite for a non-constant tail");
  const auto mask = region_mask(dom, region);
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) nodes.push_back(i);
  op.prepare_tails(E.tail, nodes);
  const std::size_t N = dom.ctx.size();
  std::vector<double> partial(nodes.size(), 0.0);
  parallel_for(nodes.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const std::size_t i = nodes[k];
      const double ti = theta[i];
      detail::Accumulator acc(op.options().compensated);
      for (std::size_t j = 0; j < N; ++j) {
        if (j == i) continue;
        const double tj = theta[j];
        const double pair = mask[j] ? ti * (1.0 - tj) : ti * (1.0 - tj) + tj * (1.0 - ti);
        if (pair != 0.0) acc.add(op.weight(i, j) * pair);
      }
      const auto T = op.tail_row(i, E.tail);
      for (std::size_t q = 0; q < T.size(); ++q) {
        const double tq = 0.5 * (E.tail.values[q] + 1.0);
        acc.add(T[q] * (ti * (1.0 - tq) + tq * (1.0 - ti)));
      }
      partial[k] = acc.value();
    }
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return dom.ctx.cell_volume() * total;
}

double perimeter(const PhaseSet& E, const FracOperator& op, const Region& region) {
  std::vector<double> theta(E.label.size());
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = E.label[i] > 0 ? 1.0 : 0.0;
  return perimeter_occupancy(E, theta, op, region);
}

std::vector<BoundaryEdge> boundary_edges(const PhaseSet& E) {
  const auto& c = E.dom->ctx;
  std::vector<BoundaryEdge> out;
  auto add = [&](std::size_t p, std::size_t q, int axis) {
    if (E.label[p] == E.label[q]) return;
    const Point a = c.coord(p), b = c.coord(q);
    BoundaryEdge e;
    e.at = {0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
    e.inside = E.label[p] > 0 ? p : q;
    e.outside = E.label[p] > 0 ? q : p;
    e.axis = axis;
    out.push_back(e);
  };
  if (c.n == 1) {
    for (int i = 0; i + 1 < c.side; ++i) add(static_cast<std::size_t>(i), static_cast<std::size_t>(i + 1), 0);
  } else {
    for (int j = 0; j < c.side; ++j)
      for (int i = 0; i < c.side; ++i) {
        if (i + 1 < c.side) add(c.index(i, j), c.index(i + 1, j), 0);
        if (j + 1 < c.side) add(c.index(i, j), c.index(i, j + 1), 1);
      }
  }
  return out;
}

BoundaryEdge snap_to_boundary(const PhaseSet& E, const Point& x) {
  const auto edges = boundary_edges(E);
  const double h = E.dom->ctx.h;
  double best = std::numeric_limits<double>::infinity();
  const BoundaryEdge* pick = nullptr;
  for (const auto& e : edges) {
    const double d = std::hypot(e.at[0] - x[0], e.at[1] - x[1]);
    if (d < best - 1e-15) {
      best = d;
      pick = &e;
    }
  }
  if (!pick || best > h * (1.0 + 1e-9))
    throw PreconditionError("point is farther than one cell from the boundary of the set");
  return *pick;
}

namespace {

double curvature_at_edge(const PhaseSet& E, const FracOperator& op, const BoundaryEdge& edge) {
  const auto& c = op.ctx();
  detail::Accumulator acc(true);
  const std::size_t N = c.size();
  if (c.n == 1) {
    const double xe = edge.at[0];
    for (std::size_t j = 0; j < N; ++j) {
      if (j == edge.inside || j == edge.outside) continue;  // mirror pair cancels
      const double off = (c.coord(j)[0] - xe) / c.h;
      acc.add(E.label[j] * detail::edge_cell_integral_1d(off, c.s, c.h));
    }
  } else {
    const auto& table = edge_table(c);
    const auto a = c.multi_index(std::min(edge.inside, edge.outside));
    for (std::size_t j = 0; j < N; ++j) {
      if (j == edge.inside || j == edge.outside) continue;
      const auto b = c.multi_index(j);
      const int ni = edge.axis == 0 ? b[0] - a[0] - 1 : b[1] - a[1] - 1;
      const int nj = edge.axis == 0 ? b[1] - a[1] : b[0] - a[0];
      acc.add(E.label[j] * table.at(ni, nj));
    }
  }
  const auto T = detail::tail_coefficients(c, E.tail, edge.at, false);
  for (std::size_t q = 0; q < T.size(); ++q) acc.add(E.tail.values[q] * T[q]);
  return -acc.value();
}

}  // namespace

double curvature_at(const PhaseSet& E, const FracOperator& op, const Point& x) {
  if (!same_discretization(*E.dom, op.domain())) throw ConfigError("phase", "set and operator use different grids");
  return curvature_at_edge(E, op, snap_to_boundary(E, x));
}

double curvature_residual(const PhaseSet& E, const GridFunction& f, const FracOperator& op) {
  const auto& dom = op.domain();
  double worst = -1.0;
  for (const auto& e : boundary_edges(E)) {
    if (!dom.in_omega(e.inside) || !dom.in_omega(e.outside)) continue;
    const double fe = 0.5 * (f[e.inside] + f[e.outside]);
    worst = std::max(worst, std::abs(dom.ctx.c_ns * curvature_at_edge(E, op, e) - fe));
  }
  if (worst < 0.0) throw PreconditionError("curvature_residual: the set has no boundary inside omega");
  return worst;
}

double first_variation(const PhaseSet& E, const VectorField& X, const FracOperator& op, VariationForm form) {
  const auto& dom = op.domain();
  const auto& c = dom.ctx;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Point p = c.coord(i);
    if (dom.in_omega(i) && shape_boundary_distance(dom.omega, p) >= 2.0 * c.h) continue;
    const Point v = X(p);
    if (v[0] != 0.0 || v[1] != 0.0)
      throw PreconditionError("first_variation: X must vanish outside omega and within two cells of its boundary");
  }

  if (form == VariationForm::surface) {
    double total = 0.0;
    const double w = c.n == 1 ? 1.0 : c.h;
    for (const auto& e : boundary_edges(E)) {
      if (!dom.in_omega(e.inside) || !dom.in_omega(e.outside)) continue;
      const Point v = X(e.at);
      const double dir = (c.coord(e.outside)[e.axis] > c.coord(e.inside)[e.axis]) ? 1.0 : -1.0;
      const double xn = v[e.axis] * dir;
      if (xn == 0.0) continue;
      total += curvature_at_edge(E, op, e) * xn * w;
    }
    return total;
  }

  const double t = 0.25 * c.h;
  const int sub = c.n == 1 ? 64 : 8;
  auto member = [&](const Point& z) -> double {
    const double L = c.extended_half_width();
    for (int k = 0; k < c.n; ++k)
      if (z[k] <= -L || z[k] >= L) return E.tail.value_at(z, c.n) > 0 ? 1.0 : 0.0;
    const int i = std::clamp(static_cast<int>(std::lround((z[0] + c.R) / c.h)), 0, c.side - 1);
    const int j = c.n == 2 ? std::clamp(static_cast<int>(std::lround((z[1] + c.R) / c.h)), 0, c.side - 1) : 0;
    return E.label[c.index(i, j)] > 0 ? 1.0 : 0.0;
  };
  auto occupancy = [&](double tt) {
    std::vector<double> theta(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      const Point p = c.coord(i);
      double in = 0.0;
      const int sy = c.n == 2 ? sub : 1;
      for (int a = 0; a < sub; ++a)
        for (int b = 0; b < sy; ++b) {
          Point y{p[0] + c.h * ((a + 0.5) / sub - 0.5), p[1]};
          if (c.n == 2) y[1] = p[1] + c.h * ((b + 0.5) / sub - 0.5);
          const Point v = X(y);
          in += member({y[0] - tt * v[0], y[1] - tt * v[1]});
        }
      theta[i] = in / (sub * sy);
    }
    return theta;
  };
  const Region omega = Region::omega_region();
  const double plus = perimeter_occupancy(E, occupancy(t), op, omega);
  const double minus = perimeter_occupancy(E, occupancy(-t), op, omega);
  return (plus - minus) / (2.0 * t);
}

double partition_perimeter(const Partition& P, const std::vector<double>& wells, const FracOperator& op,
                           const Region& region) {
  const auto& dom = op.domain();
  if (!same_discretization(*P.dom, dom)) throw ConfigError("partition", "partition and operator use different grids");
  auto check = [&](double v) {
    for (double a : wells)
      if (std::abs(v - a) <= 1e-12) return;
    throw ConfigError("partition", "label outside the well set");
  };
  for (double v : P.labels) check(v);
  for (double v : P.tail.values) check(v);
  if (region.kind == Region::Kind::whole && !P.tail.is_constant())
    throw PreconditionError("partition perimeter over the whole space needs a constant tail");
  const auto mask = region_mask(dom, region);
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) nodes.push_back(i);
  op.prepare_tails(P.tail, nodes);
  const std::size_t N = dom.ctx.size();
  std::vector<double> partial(nodes.size(), 0.0);
  parallel_for(nodes.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const std::size_t i = nodes[k];
      detail::Accumulator acc(op.options().compensated);
      for (std::size_t j = 0; j < N; ++j) {
        if (j == i) continue;
        const double d = P.labels[i] - P.labels[j];
        if (d == 0.0) continue;
        acc.add((mask[j] ? 1.0 : 2.0) * op.weight(i, j) * d * d);
      }
      const auto T = op.tail_row(i, P.tail);
      for (std::size_t q = 0; q < T.size(); ++q) {
        const double d = P.labels[i] - P.tail.values[q];
        acc.add(2.0 * T[q] * d * d);
      }
      partial[k] = acc.value();
    }
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return 0.5 * dom.ctx.cell_volume() * total;
}

std::pair<double, double> hausdorff_gap(const std::vector<Point>& A, const std::vector<Point>& B) {
  if (A.empty() || B.empty()) throw PreconditionError("hausdorff_gap: empty point set");
  auto one_sided = [](const std::vector<Point>& P, const std::vector<Point>& Q) {
    double worst = 0.0;
    for (const auto& p : P) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : Q) best = std::min(best, std::hypot(p[0] - q[0], p[1] - q[1]));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return {one_sided(A, B), one_sided(B, A)};
}

void write_interface_csv(std::ostream& os, const Interface& itf, int n, int precision) {
  os << std::setprecision(precision);
  if (n == 1) {
    os << "x\n";
    for (const auto& p : itf.points) os << p[0] << '\n';
    return;
  }
  os << "x0,y0,x1,y1\n";
  for (const auto& s : itf.segments) os << s[0][0] << ',' << s[0][1] << ',' << s[1][0] << ',' << s[1][1] << '\n';
}

void write_svg_overlay(std::ostream& os, const GridFunction& u, const Interface& itf, double view) {
  const auto& c = u.domain().ctx;
  if (c.n != 2) throw PreconditionError("svg overlay is 2D only");
  const double px = 400.0 / (2.0 * view);
  auto X = [&](double x) { return (x + view) * px; };
  auto Y = [&](double y) { return (view - y) * px; };
  os << std::fixed << std::setprecision(3);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"400\" height=\"400\" viewBox=\"0 0 400 400\">\n";
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Point p = c.coord(i);
    if (std::abs(p[0]) > view || std::abs(p[1]) > view) continue;
    const double v = std::clamp(0.5 * (u[i] + 1.0), 0.0, 1.0);
    const int g = static_cast<int>(std::lround(40 + 180 * v));
    os << "<rect x=\"" << X(p[0] - 0.5 * c.h) << "\" y=\"" << Y(p[1] + 0.5 * c.h) << "\" width=\"" << c.h * px
       << "\" height=\"" << c.h * px << "\" fill=\"rgb(" << g << ',' << g << ',' << g << ")\"/>\n";
  }
  for (const auto& s : itf.segments)
    os << "<line x1=\"" << X(s[0][0]) << "\" y1=\"" << Y(s[0][1]) << "\" x2=\"" << X(s[1][0]) << "\" y2=\""
       << Y(s[1][1]) << "\" stroke=\"#d62728\" stroke-width=\"1.5\"/>\n";
  os << "</svg>\n";
}

}  // namespace fracac
