#include "fracac/domain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "fracac/errors.hpp"

namespace fracac {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a;
}

struct DimensionVisitor {
  int operator()(const Interval&) const { return 1; }
  int operator()(const Rectangle&) const { return 2; }
  int operator()(const Disc&) const { return 2; }
};

}  // namespace

int shape_dimension(const Shape& shape) { return std::visit(DimensionVisitor{}, shape); }

bool shape_contains(const Shape& shape, const Point& p) {
  if (auto* iv = std::get_if<Interval>(&shape)) return p[0] > iv->a && p[0] < iv->b;
  if (auto* r = std::get_if<Rectangle>(&shape))
    return p[0] > r->x0 && p[0] < r->x1 && p[1] > r->y0 && p[1] < r->y1;
  const auto& d = std::get<Disc>(shape);
  return std::hypot(p[0] - d.cx, p[1] - d.cy) < d.r;
}

double shape_diameter(const Shape& shape) {
  if (auto* iv = std::get_if<Interval>(&shape)) return iv->b - iv->a;
  if (auto* r = std::get_if<Rectangle>(&shape)) return std::hypot(r->x1 - r->x0, r->y1 - r->y0);
  return 2.0 * std::get<Disc>(shape).r;
}

double shape_measure(const Shape& shape) {
  if (auto* iv = std::get_if<Interval>(&shape)) return iv->b - iv->a;
  if (auto* r = std::get_if<Rectangle>(&shape)) return (r->x1 - r->x0) * (r->y1 - r->y0);
  const double r = std::get<Disc>(shape).r;
  return std::numbers::pi * r * r;
}

std::pair<Point, Point> shape_bounds(const Shape& shape) {
  if (auto* iv = std::get_if<Interval>(&shape)) return {{iv->a, 0.0}, {iv->b, 0.0}};
  if (auto* r = std::get_if<Rectangle>(&shape)) return {{r->x0, r->y0}, {r->x1, r->y1}};
  const auto& d = std::get<Disc>(shape);
  return {{d.cx - d.r, d.cy - d.r}, {d.cx + d.r, d.cy + d.r}};
}

double shape_boundary_distance(const Shape& shape, const Point& p) {
  if (auto* iv = std::get_if<Interval>(&shape)) return std::min(std::abs(p[0] - iv->a), std::abs(p[0] - iv->b));
  if (auto* r = std::get_if<Rectangle>(&shape)) {
    const double dx = std::max({r->x0 - p[0], 0.0, p[0] - r->x1});
    const double dy = std::max({r->y0 - p[1], 0.0, p[1] - r->y1});
    if (dx > 0.0 || dy > 0.0) return std::hypot(dx, dy);
    return std::min({p[0] - r->x0, r->x1 - p[0], p[1] - r->y0, r->y1 - p[1]});
  }
  const auto& d = std::get<Disc>(shape);
  return std::abs(std::hypot(p[0] - d.cx, p[1] - d.cy) - d.r);
}

std::string shape_describe(const Shape& shape) {
  std::ostringstream os;
  if (auto* iv = std::get_if<Interval>(&shape)) {
    os << "interval(" << iv->a << ", " << iv->b << ")";
  } else if (auto* r = std::get_if<Rectangle>(&shape)) {
    os << "rectangle(" << r->x0 << ", " << r->x1 << ") x (" << r->y0 << ", " << r->y1 << ")";
  } else {
    const auto& d = std::get<Disc>(shape);
    os << "disc(center=(" << d.cx << ", " << d.cy << "), r=" << d.r << ")";
  }
  return os.str();
}

double normalization_constant(int n, double s) {
  if (n != 1 && n != 2) throw ConfigError("n", "dimension must be 1 or 2");
  if (!(s > 0.0 && s < 0.5)) throw ConfigError("s", "s out of range (0, 0.5)");
  // |Γ(-s)| = Γ(1-s)/s for s in (0,1)
  const double log_c = s * std::log(4.0) + std::lgamma(0.5 * n + s) -
                       0.5 * n * std::log(std::numbers::pi) - std::lgamma(1.0 - s) + std::log(s);
  return std::exp(log_c);
}

std::size_t FracContext::size() const {
  const auto m = static_cast<std::size_t>(side);
  return n == 1 ? m : m * m;
}

Point FracContext::coord(std::size_t idx) const {
  const auto mi = multi_index(idx);
  // centred form keeps node coordinates like -1.0 exact
  const double mid = 0.5 * (side - 1);
  return {(mi[0] - mid) * h, n == 1 ? 0.0 : (mi[1] - mid) * h};
}

std::array<int, 2> FracContext::multi_index(std::size_t idx) const {
  if (n == 1) return {static_cast<int>(idx), 0};
  return {static_cast<int>(idx % side), static_cast<int>(idx / side)};
}

std::size_t FracContext::index(int i, int j) const {
  return static_cast<std::size_t>(i) + (n == 1 ? 0 : static_cast<std::size_t>(j) * side);
}

double FracContext::cell_volume() const { return n == 1 ? h : h * h; }

DomainPtr build_context(int n, double s, double h, double R, const Shape& omega) {
  if (n != 1 && n != 2) throw ConfigError("n", "dimension must be 1 or 2");
  if (!(s > 0.0 && s < 0.5)) throw ConfigError("s", "s out of range (0, 0.5)");
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("h", "grid spacing must be positive");
  if (!(R > 0.0) || !std::isfinite(R)) throw ConfigError("R", "truncation radius must be positive");
  if (shape_dimension(omega) != n) throw ConfigError("omega", "shape dimension does not match n");

  const double cells = 2.0 * R / h;
  const double rounded = std::round(cells);
  if (std::abs(cells - rounded) > 1e-9 * std::max(1.0, cells))
    throw ConfigError("h", "h must divide the box [-R, R] evenly");
  if (rounded < 2.0) throw ConfigError("h", "grid too coarse");

  if (auto* iv = std::get_if<Interval>(&omega); iv && !(iv->b > iv->a))
    throw ConfigError("omega", "empty interval");
  if (auto* r = std::get_if<Rectangle>(&omega); r && !(r->x1 > r->x0 && r->y1 > r->y0))
    throw ConfigError("omega", "empty rectangle");
  if (auto* d = std::get_if<Disc>(&omega); d && !(d->r > 0.0)) throw ConfigError("omega", "disc radius must be positive");

  const double margin = 1.5 * shape_diameter(omega);
  const auto [lo, hi] = shape_bounds(omega);
  for (int k = 0; k < n; ++k) {
    if (lo[k] - margin < -R || hi[k] + margin > R)
      throw ConfigError("omega", "omega is not inside the box with margin 3*diam/2 (" + shape_describe(omega) + ")");
  }

  auto dom = std::make_shared<Domain>();
  FracContext& ctx = dom->ctx;
  ctx.n = n;
  ctx.s = s;
  ctx.h = h;
  ctx.R = R;
  ctx.side = static_cast<int>(rounded) + 1;
  ctx.c_ns = normalization_constant(n, s);
  dom->omega = omega;

  const std::size_t N = ctx.size();
  dom->omega_mask.assign(N, 0);
  dom->interior_slot.assign(N, -1);
  for (std::size_t i = 0; i < N; ++i) {
    if (shape_contains(omega, ctx.coord(i))) {
      dom->omega_mask[i] = 1;
      dom->interior_slot[i] = static_cast<std::ptrdiff_t>(dom->interior.size());
      dom->interior.push_back(i);
    } else {
      dom->exterior.push_back(i);
    }
  }
  if (dom->interior.empty()) throw ConfigError("omega", "no grid node falls inside omega");
  if (dom->interior.size() + dom->exterior.size() != N) throw NumericalError("mask partition broken");

  for (std::size_t i : dom->interior) {
    const auto mi = ctx.multi_index(i);
    bool edge = false;
    for (int k = 0; k < n && !edge; ++k) {
      for (int step : {-1, 1}) {
        auto nb = mi;
        nb[k] += step;
        // omega sits well inside the box, so neighbours exist
        if (!dom->omega_mask[ctx.index(nb[0], nb[1])]) edge = true;
      }
    }
    if (edge) dom->boundary_nodes.push_back(i);
  }
  return dom;
}

std::vector<char> region_mask(const Domain& dom, const Region& region) {
  switch (region.kind) {
    case Region::Kind::omega:
      return dom.omega_mask;
    case Region::Kind::whole:
      return std::vector<char>(dom.ctx.size(), 1);
    case Region::Kind::subset: {
      if (shape_dimension(region.shape) != dom.ctx.n) throw ConfigError("region", "dimension mismatch");
      std::vector<char> mask(dom.ctx.size(), 0);
      for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!shape_contains(region.shape, dom.ctx.coord(i))) continue;
        if (!dom.omega_mask[i]) throw ConfigError("region", "region exceeds omega: " + shape_describe(region.shape));
        mask[i] = 1;
      }
      return mask;
    }
  }
  return {};
}

ExteriorTail ExteriorTail::constant(int n, double v) {
  ExteriorTail t;
  t.values.assign(n == 1 ? 2 : 1, v);
  return t;
}

ExteriorTail ExteriorTail::sides(double left, double right) { return {{}, {left, right}}; }

ExteriorTail ExteriorTail::halfplane(double angle_of_normal, double above, double below, Point through) {
  const double a0 = wrap_angle(angle_of_normal - 0.5 * std::numbers::pi);
  const double a1 = wrap_angle(angle_of_normal + 0.5 * std::numbers::pi);
  // sector [a0, a1) holds the normal direction
  if (a0 < a1) return {{a0, a1}, {above, below}, through};
  return {{a1, a0}, {below, above}, through};
}

std::size_t ExteriorTail::sector_count(int n) const {
  if (n == 1) return 2;
  return cuts.size() < 2 ? 1 : cuts.size();
}

std::size_t ExteriorTail::sector_of(const Point& y, int n) const {
  if (n == 1) return y[0] < 0.0 ? 0 : 1;
  if (cuts.size() < 2) return 0;
  const double a = wrap_angle(std::atan2(y[1] - center[1], y[0] - center[0]));
  auto it = std::upper_bound(cuts.begin(), cuts.end(), a);
  if (it == cuts.begin()) return cuts.size() - 1;
  return static_cast<std::size_t>(it - cuts.begin()) - 1;
}

double ExteriorTail::value_at(const Point& y, int n) const { return values[sector_of(y, n)]; }

bool ExteriorTail::is_constant() const {
  return std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); });
}

void ExteriorTail::validate(int n) const {
  if (n == 1 && !cuts.empty()) throw ConfigError("tail", "1D tails have no angular cuts");
  if (!std::isfinite(center[0]) || !std::isfinite(center[1])) throw ConfigError("tail", "tail center must be finite");
  if (values.size() != sector_count(n)) throw ConfigError("tail", "tail value count does not match sectors");
  if (!std::is_sorted(cuts.begin(), cuts.end())) throw ConfigError("tail", "tail cuts must be sorted");
  for (double c : cuts)
    if (!(c >= 0.0 && c < kTwoPi)) throw ConfigError("tail", "tail cuts must lie in [0, 2pi)");
  for (double v : values)
    if (!std::isfinite(v)) throw ConfigError("tail", "tail values must be finite");
}

GridFunction::GridFunction(DomainPtr dom, std::vector<double> values, std::optional<ExteriorTail> tail)
    : dom_(std::move(dom)), values_(std::move(values)), tail_(std::move(tail)) {
  if (!dom_) throw ConfigError("grid", "null domain");
  if (values_.size() != dom_->ctx.size()) throw ConfigError("grid", "value count does not match grid size");
  for (double v : values_)
    if (!std::isfinite(v)) throw NumericalError("grid function holds a non-finite value");
  if (tail_) tail_->validate(dom_->ctx.n);
}

GridFunction GridFunction::constant(DomainPtr dom, double v, bool with_tail) {
  const int n = dom->ctx.n;
  const std::size_t N = dom->ctx.size();
  std::optional<ExteriorTail> tail;
  if (with_tail) tail = ExteriorTail::constant(n, v);
  return GridFunction(std::move(dom), std::vector<double>(N, v), std::move(tail));
}

GridFunction GridFunction::sample(DomainPtr dom, const std::function<double(const Point&)>& fn,
                                  std::optional<ExteriorTail> tail) {
  std::vector<double> v(dom->ctx.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(dom->ctx.coord(i));
  return GridFunction(std::move(dom), std::move(v), std::move(tail));
}

void GridFunction::set(std::size_t i, double v) {
  if (!std::isfinite(v)) throw NumericalError("attempt to store a non-finite value");
  values_.at(i) = v;
}

void GridFunction::set_tail(std::optional<ExteriorTail> tail) {
  if (tail) tail->validate(dom_->ctx.n);
  tail_ = std::move(tail);
}

double GridFunction::sup_norm() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  if (tail_)
    for (double v : tail_->values) m = std::max(m, std::abs(v));
  return m;
}

double GridFunction::interior_sup_norm() const {
  double m = 0.0;
  for (std::size_t i : dom_->interior) m = std::max(m, std::abs(values_[i]));
  return m;
}

double InteriorField::sup_norm() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

GridFunction InteriorField::to_grid(double fill) const {
  std::vector<double> v(dom->ctx.size(), fill);
  for (std::size_t k = 0; k < dom->interior.size(); ++k) v[dom->interior[k]] = values[k];
  return GridFunction(dom, std::move(v));
}

InteriorField restrict_to_interior(const GridFunction& u) {
  InteriorField out{u.domain_ptr(), {}};
  out.values.reserve(u.domain().interior.size());
  for (std::size_t i : u.domain().interior) out.values.push_back(u[i]);
  return out;
}

bool same_discretization(const Domain& a, const Domain& b) {
  if (&a == &b) return true;
  return a.ctx.n == b.ctx.n && a.ctx.s == b.ctx.s && a.ctx.h == b.ctx.h && a.ctx.R == b.ctx.R &&
         a.omega_mask == b.omega_mask;
}

GridFunction impose_exterior(const GridFunction& u, const GridFunction& g) {
  if (!same_discretization(u.domain(), g.domain()))
    throw ConfigError("exterior", "u and g live on different grids");
  std::vector<double> v(g.values().begin(), g.values().end());
  for (std::size_t i : u.domain().interior) v[i] = u[i];
  return GridFunction(g.domain_ptr(), std::move(v), g.tail());
}

void write_csv(std::ostream& os, const GridFunction& u, int precision) {
  const auto& ctx = u.domain().ctx;
  os << (ctx.n == 1 ? "x,value\n" : "x,y,value\n");
  os << std::setprecision(precision);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Point p = ctx.coord(i);
    os << p[0] << ',';
    if (ctx.n == 2) os << p[1] << ',';
    os << u[i] << '\n';
  }
}

void write_csv(const std::string& path, const GridFunction& u, int precision) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_csv(os, u, precision);
}

GridFunction read_csv(const std::string& path, DomainPtr dom, std::optional<ExteriorTail> tail) {
  std::ifstream is(path);
  if (!is) throw ConfigError("csv", "cannot open " + path);
  std::string line;
  std::getline(is, line);
  const auto& ctx = dom->ctx;
  std::vector<double> v(ctx.size(), 0.0);
  std::vector<char> seen(ctx.size(), 0);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double x = 0.0, y = 0.0, val = 0.0;
    ls >> x;
    if (ctx.n == 2) ls >> y;
    ls >> val;
    if (!ls) throw ConfigError("csv", "malformed row in " + path + ": " + line);
    const int i = static_cast<int>(std::lround((x + ctx.R) / ctx.h));
    const int j = ctx.n == 2 ? static_cast<int>(std::lround((y + ctx.R) / ctx.h)) : 0;
    if (i < 0 || i >= ctx.side || j < 0 || j >= ctx.side) throw ConfigError("csv", "row outside the grid in " + path);
    const std::size_t idx = ctx.index(i, j);
    v[idx] = val;
    seen[idx] = 1;
  }
  if (std::count(seen.begin(), seen.end(), 0) != 0) throw ConfigError("csv", path + " does not cover the grid");
  return GridFunction(std::move(dom), std::move(v), std::move(tail));
}

}  // namespace fracac
