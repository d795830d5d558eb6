#include "fracac/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "fracac/parallel.hpp"

namespace fracac {

namespace {

// Points on the boundary of a shape, used for containment margins.
std::vector<Point> boundary_samples(const Shape& shape) {
  std::vector<Point> pts;
  if (auto* iv = std::get_if<Interval>(&shape)) {
    pts.push_back({iv->a, 0.0});
    pts.push_back({iv->b, 0.0});
  } else if (auto* r = std::get_if<Rectangle>(&shape)) {
    const int m = 128;
    for (int k = 0; k <= m; ++k) {
      const double t = static_cast<double>(k) / m;
      const double x = r->x0 + t * (r->x1 - r->x0), y = r->y0 + t * (r->y1 - r->y0);
      pts.push_back({x, r->y0});
      pts.push_back({x, r->y1});
      pts.push_back({r->x0, y});
      pts.push_back({r->x1, y});
    }
  } else {
    const auto& d = std::get<Disc>(shape);
    for (int k = 0; k < 512; ++k) {
      const double a = 2.0 * std::numbers::pi * k / 512.0;
      pts.push_back({d.cx + d.r * std::cos(a), d.cy + d.r * std::sin(a)});
    }
  }
  return pts;
}

void require_inside(const Domain& dom, const Shape& inner, double margin, const char* field) {
  if (shape_dimension(inner) != dom.ctx.n) throw ConfigError(field, "dimension differs from the grid");
  for (const Point& p : boundary_samples(inner))
    if (!shape_contains(dom.omega, p) || shape_boundary_distance(dom.omega, p) < margin - 1e-12)
      throw ConfigError(field, shape_describe(inner) + " must lie at distance >= " + std::to_string(margin) +
                                   " inside " + shape_describe(dom.omega));
}

double point_segment_distance(const Point& p, const Point& a, const Point& b) {
  const double dx = b[0] - a[0], dy = b[1] - a[1];
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p[0] - a[0] - t * dx, p[1] - a[1] - t * dy);
}

std::pair<double, double> outer_wells(const Potential& pot) {
  const auto& w = pot.wells();
  return {w.front(), w.back()};
}

double limit_value(const SweepRecord& rec, std::size_t i) {
  return rec.limit.label[i] > 0 ? rec.well_hi : rec.well_lo;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    sx += x[k];
    sy += y[k];
    sxx += x[k] * x[k];
    sxy += x[k] * y[k];
  }
  const double den = n * sxx - sx * sx;
  return den != 0.0 ? (n * sxy - sx * sy) / den : std::numeric_limits<double>::quiet_NaN();
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

}  // namespace

GridFunction sign_data(DomainPtr dom, double angle, double width) {
  const int n = dom->ctx.n;
  const double nx = n == 1 ? 1.0 : std::cos(angle), ny = n == 1 ? 0.0 : std::sin(angle);
  auto fn = [=](const Point& p) {
    const double t = p[0] * nx + (n == 2 ? p[1] * ny : 0.0);
    if (width > 0.0) return std::tanh(t / width);
    return t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0);
  };
  const ExteriorTail tail = n == 1 ? ExteriorTail::sides(-1.0, 1.0) : ExteriorTail::halfplane(angle, 1.0, -1.0);
  return GridFunction::sample(std::move(dom), fn, tail);
}

GridFunction bump_source(DomainPtr dom, Point center, double width, double amplitude) {
  if (!(width > 0.0)) throw ConfigError("source.width", "must be positive");
  const int n = dom->ctx.n;
  return GridFunction::sample(std::move(dom), [=](const Point& p) {
    const double dx = p[0] - center[0], dy = n == 2 ? p[1] - center[1] : 0.0;
    const double r = std::hypot(dx, dy) / width;
    return r < 1.0 ? amplitude * std::exp(1.0 - 1.0 / (1.0 - r * r)) : 0.0;
  });
}

void SweepPlan::validate(const Domain& dom) const {
  if (eps_list.empty()) throw ConfigError("eps_list", "empty");
  for (std::size_t k = 0; k < eps_list.size(); ++k) {
    if (!(eps_list[k] > 0.0)) throw ConfigError("eps_list", "values must be positive");
    if (k > 0 && !(eps_list[k] < eps_list[k - 1])) throw ConfigError("eps_list", "must be strictly decreasing");
  }
  auto check_fields = [&](const std::vector<GridFunction>& v, const char* name) {
    if (v.size() != 1 && v.size() != eps_list.size())
      throw ConfigError(name, "give one field or one per eps");
    for (const auto& u : v)
      if (!same_discretization(u.domain(), dom)) throw ConfigError(name, "field lives on another grid");
  };
  check_fields(g, "g");
  check_fields(f, "f");
  if (pot.wells().size() < 2) throw ConfigError("potential", "needs at least two wells");
  require_inside(dom, probe_region, 4.0 * dom.ctx.h, "probe_region");
  const auto [lo, hi] = outer_wells(pot);
  for (double d : deltas)
    if (!(d > lo && d < hi)) throw ConfigError("deltas", "level values must lie strictly between the outer wells");
  for (double r : r_list)
    if (!(r > 0.0)) throw ConfigError("r_list", "radii must be positive");
}

namespace {

void finish_step(SweepStep& step, const SweepPlan& plan, std::size_t k, double mid, const FracOperator& op) {
  const auto& dom = op.domain();
  const GridFunction& f = plan.f_at(k);
  const GridFunction& u = step.report.u;
  step.probe_energy = op.sobolev_energy(u, Region::subset(plan.probe_region));
  for (double d : plan.deltas) step.level_sets.push_back(extract_interface(u, d).interface);
  try {
    step.curvature_residual = curvature_residual(extract_interface(u, mid), f, op);
  } catch (const PreconditionError&) {
    step.curvature_residual.reset();
  }
  const double e2s = std::pow(step.eps, 2.0 * dom.ctx.s);
  std::vector<double> q(u.size(), 0.0);
  for (std::size_t i : dom.interior) q[i] = f[i] - plan.pot.W1(u[i]) / e2s;
  step.q = GridFunction(u.domain_ptr(), std::move(q));
}

SweepRecord start_record(const SweepPlan& plan) {
  const auto [lo, hi] = outer_wells(plan.pot);
  SweepRecord rec;
  rec.probe_region = plan.probe_region;
  rec.limit_level = 0.5 * (lo + hi);
  rec.well_lo = lo;
  rec.well_hi = hi;
  return rec;
}

void finish_record(SweepRecord& rec, const Domain& dom) {
  if (!std::isfinite(rec.energy_bound)) throw SweepError("energy bound is not finite", rec);
  rec.limit = extract_interface(rec.steps.back().report.u, rec.limit_level);
  bool any_in = false, any_out = false;
  for (std::size_t i : dom.interior) (rec.limit.label[i] > 0 ? any_in : any_out) = true;
  rec.trivial_phase = !(any_in && any_out);
}

}  // namespace

SweepRecord run_sweep(const SweepPlan& plan, const FracOperator& op) {
  const auto& dom = op.domain();
  plan.validate(dom);
  const double s = dom.ctx.s;
  SweepRecord rec = start_record(plan);
  for (std::size_t k = 0; k < plan.eps_list.size(); ++k) {
    const double eps = plan.eps_list[k];
    rec.source_bound = std::max(rec.source_bound, std::pow(eps, 2.0 * s) * plan.f_at(k).interior_sup_norm());

    SolveConfig cfg = plan.solve;
    cfg.eps = eps;
    if (plan.warm_start && !rec.steps.empty()) {
      cfg.init = InitKind::custom;
      cfg.custom_init = rec.steps.back().report.u;
    }
    SweepStep step;
    step.eps = eps;
    try {
      step.report = solve(plan.g_at(k), plan.pot, plan.f_at(k), cfg, op);
    } catch (const std::exception& e) {
      throw SweepError("sweep step " + std::to_string(k) + " (eps=" + fmt(eps) + ") failed: " + e.what(), rec);
    }
    finish_step(step, plan, k, rec.limit_level, op);
    rec.energy_bound = std::max(rec.energy_bound, step.report.final_energy);
    rec.steps.push_back(std::move(step));
  }
  finish_record(rec, dom);
  return rec;
}

SweepRecord rebuild_record(const SweepPlan& plan, const std::vector<GridFunction>& fields, const FracOperator& op) {
  const auto& dom = op.domain();
  plan.validate(dom);
  if (fields.size() != plan.eps_list.size()) throw ConfigError("fields", "one field per eps expected");
  const double s = dom.ctx.s;
  SweepRecord rec = start_record(plan);
  for (std::size_t k = 0; k < fields.size(); ++k) {
    const double eps = plan.eps_list[k];
    if (!same_discretization(fields[k].domain(), dom)) throw ConfigError("fields", "field grid differs from the plan");
    const GridFunction u = impose_exterior(fields[k], plan.g_at(k));
    rec.source_bound = std::max(rec.source_bound, std::pow(eps, 2.0 * s) * plan.f_at(k).interior_sup_norm());
    SweepStep step;
    step.eps = eps;
    step.report.u = u;
    step.report.eps = eps;
    step.report.s = s;
    step.report.final_energy = total_energy(u, plan.pot, plan.f_at(k), eps, op);
    step.report.energy_trace = {step.report.final_energy};
    const GridFunction gr = gradient(u, plan.pot, plan.f_at(k), eps, op);
    step.report.grad_norm = gr.interior_sup_norm();
    step.report.stationarity_residual = step.report.grad_norm;
    step.report.sup_u = u.interior_sup_norm();
    step.report.converged = true;
    finish_step(step, plan, k, rec.limit_level, op);
    rec.energy_bound = std::max(rec.energy_bound, step.report.final_energy);
    rec.steps.push_back(std::move(step));
  }
  finish_record(rec, dom);
  return rec;
}

void write_table_csv(std::ostream& os, const Table& t, int precision) {
  os << std::setprecision(precision);
  for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c];
    os << '\n';
  }
  os << "# " << (t.skipped ? "SKIPPED" : (t.passed ? "PASS" : "FAIL")) << ": " << t.verdict << '\n';
}

int monotone_violations(const std::vector<double>& a, bool increasing) {
  int v = 0;
  for (std::size_t k = 1; k < a.size(); ++k)
    if (increasing ? a[k] < a[k - 1] : a[k] > a[k - 1]) ++v;
  return v;
}

double distance_to_interface(const Interface& itf, const Point& p) {
  double best = std::numeric_limits<double>::infinity();
  if (!itf.segments.empty()) {
    for (const auto& s : itf.segments) best = std::min(best, point_segment_distance(p, s[0], s[1]));
  } else {
    for (const auto& q : itf.points) best = std::min(best, std::hypot(p[0] - q[0], p[1] - q[1]));
  }
  return best;
}

ConvergenceCheck check_uniform_convergence(const SweepRecord& rec, double r) {
  if (rec.steps.empty()) throw PreconditionError("empty sweep record");
  if (!(r >= 0.0)) throw ConfigError("r", "tube radius must be nonnegative");
  const Domain& dom = rec.steps.front().report.u.domain();
  std::vector<std::size_t> nodes;
  for (std::size_t i : dom.interior) {
    const Point p = dom.ctx.coord(i);
    if (!shape_contains(rec.probe_region, p)) continue;
    if (!rec.limit.interface.empty() && distance_to_interface(rec.limit.interface, p) < r) continue;
    nodes.push_back(i);
  }
  if (nodes.empty()) throw PreconditionError("probe region is empty after removing the tube");

  ConvergenceCheck out;
  out.table.name = "uniform_convergence";
  out.table.columns = {"k", "eps", "sup"};
  for (std::size_t k = 0; k < rec.steps.size(); ++k) {
    const GridFunction& u = rec.steps[k].report.u;
    double sup = 0.0;
    for (std::size_t i : nodes) sup = std::max(sup, std::abs(u[i] - limit_value(rec, i)));
    out.sups.push_back(sup);
    out.table.rows.push_back({static_cast<double>(k), rec.steps[k].eps, sup});
  }
  out.violations = monotone_violations(out.sups);
  out.final_sup = out.sups.back();
  out.table.passed = out.violations <= 1 && out.final_sup < 0.05;
  out.table.verdict = "final sup " + fmt(out.final_sup) + " (need < 0.05), " + std::to_string(out.violations) +
                      " monotonicity violations (allow 1), tube radius " + fmt(r);
  return out;
}

double pointwise_rate(const SweepRecord& rec, const Point& x) {
  if (rec.steps.size() < 2) throw PreconditionError("rate needs at least two steps");
  const Domain& dom = rec.steps.front().report.u.domain();
  std::size_t best = dom.interior.front();
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t i : dom.interior) {
    const Point p = dom.ctx.coord(i);
    const double d = std::hypot(p[0] - x[0], p[1] - x[1]);
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  std::vector<double> le, lv;
  for (const auto& st : rec.steps) {
    const double e = std::abs(st.report.u[best] - limit_value(rec, best));
    if (e > 0.0) {
      le.push_back(std::log(st.eps));
      lv.push_back(std::log(e));
    }
  }
  if (le.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  return fit_slope(le, lv);
}

EnergyPerimeterCheck check_energy_perimeter(const SweepRecord& rec, const Shape& probe, const FracOperator& op) {
  if (rec.steps.empty()) throw PreconditionError("empty sweep record");
  EnergyPerimeterCheck out;
  out.table.name = "energy_perimeter";
  out.table.columns = {"k", "eps", "energy", "ratio"};
  const Domain& dom = rec.steps.front().report.u.domain();
  if (!rec.trivial_phase) out.perimeter = perimeter(rec.limit, op, Region::subset(probe));
  if (rec.trivial_phase || out.perimeter <= 0.0) {
    out.table.skipped = true;
    out.table.verdict = "trivial phase: no interface in the probe region";
    return out;
  }
  const double denom = 2.0 * dom.ctx.c_ns * out.perimeter;
  std::vector<double> dist;
  for (std::size_t k = 0; k < rec.steps.size(); ++k) {
    const double E = op.sobolev_energy(rec.steps[k].report.u, Region::subset(probe));
    const double ratio = E / denom;
    out.ratios.push_back(ratio);
    dist.push_back(std::abs(ratio - 1.0));
    out.table.rows.push_back({static_cast<double>(k), rec.steps[k].eps, E, ratio});
  }
  out.violations = monotone_violations(dist);
  const double last = out.ratios.back();
  out.table.passed = last >= 0.85 && last <= 1.15 && out.violations <= 1;
  out.table.verdict = "final ratio " + fmt(last) + " (need [0.85, 1.15]), " + std::to_string(out.violations) +
                      " violations of the trend toward 1 (allow 1)";
  return out;
}

GridFunction limit_rhs(const GridFunction& u_star, const FracOperator& op) {
  const auto& dom = op.domain();
  for (double v : u_star.values())
    if (std::abs(std::abs(v) - 1.0) > 1e-12) throw PreconditionError("u_* must be ±1-valued");
  const ExteriorTail tail = op.effective_tail(u_star);
  for (double v : tail.values)
    if (std::abs(std::abs(v) - 1.0) > 1e-12) throw PreconditionError("u_* tail must be ±1-valued");
  op.prepare_tails(tail, dom.interior);
  const std::size_t N = dom.ctx.size();
  const double c = dom.ctx.c_ns;
  std::vector<double> out(N, 0.0);
  parallel_for(dom.interior.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const std::size_t i = dom.interior[k];
      const double ui = u_star[i];
      double sum = 0.0;
      for (std::size_t j = 0; j < N; ++j)
        if (j != i && u_star[j] != ui) sum += 4.0 * op.weight(i, j);
      const auto T = op.tail_row(i, tail);
      for (std::size_t q = 0; q < T.size(); ++q)
        if (tail.values[q] != ui) sum += 4.0 * T[q];
      out[i] = 0.5 * c * sum * ui;
    }
  });
  return GridFunction(u_star.domain_ptr(), std::move(out));
}

LimitIdentity limit_identity_field(const SweepRecord& rec, std::size_t k, const FracOperator& op, int pairs,
                                   std::uint64_t seed) {
  if (k >= rec.steps.size()) throw ConfigError("k", "step index out of range");
  LimitIdentity out;
  out.lhs = rec.steps[k].q;
  const GridFunction u_star = rec.limit.indicator_field();
  out.rhs = limit_rhs(u_star, op);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> node(0, u_star.size() - 1);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  for (int t = 0; t < pairs; ++t) {
    const std::size_t i = node(rng), j = node(rng);
    const double ux = u_star[i], uy = u_star[j];
    const double px = val(rng), py = val(rng);
    const double lhs = (ux - uy) * (px - py);
    const double rhs = 0.5 * (ux - uy) * (ux - uy) * (ux * px + uy * py);
    out.identity_discrepancy = std::max(out.identity_discrepancy, std::abs(lhs - rhs));
  }
  return out;
}

std::vector<GridFunction> test_function_bank(DomainPtr dom, const Shape& probe, int count, std::uint64_t seed) {
  require_inside(*dom, probe, 0.0, "probe_region");
  const auto [lo, hi] = shape_bounds(probe);
  const double h = dom->ctx.h;
  const int n = dom->ctx.n;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<GridFunction> bank;
  int attempts = 0;
  while (static_cast<int>(bank.size()) < count) {
    if (++attempts > 100000) throw PreconditionError("probe region too small for the test-function bank");
    const Point c{lo[0] + U(rng) * (hi[0] - lo[0]), n == 2 ? lo[1] + U(rng) * (hi[1] - lo[1]) : 0.0};
    if (!shape_contains(probe, c)) continue;
    const double room = shape_boundary_distance(probe, c);
    if (room < 6.0 * h) continue;
    const double rho = room * (0.4 + 0.6 * U(rng));
    const double k = 2.0 * std::numbers::pi * U(rng) / rho, ph = 2.0 * std::numbers::pi * U(rng);
    bank.push_back(GridFunction::sample(dom, [=](const Point& p) {
      const double r = std::hypot(p[0] - c[0], n == 2 ? p[1] - c[1] : 0.0) / rho;
      if (r >= 1.0) return 0.0;
      return std::exp(1.0 - 1.0 / (1.0 - r * r)) * (1.0 + 0.5 * std::cos(k * (p[0] - c[0]) + ph));
    }));
  }
  return bank;
}

DualityCheck check_limit_identity(const SweepRecord& rec, const FracOperator& op, int bank_size, std::uint64_t seed) {
  if (rec.steps.empty()) throw PreconditionError("empty sweep record");
  const auto& dom = op.domain();
  DualityCheck out;
  out.table.name = "limit_identity";
  out.table.columns = {"k", "eps", "gap"};
  const LimitIdentity last = limit_identity_field(rec, rec.steps.size() - 1, op, 10000, seed);
  out.identity_discrepancy = last.identity_discrepancy;
  const auto bank = test_function_bank(op.domain_ptr(), rec.probe_region, bank_size, seed + 1);
  std::vector<double> norms;
  for (const auto& phi : bank) norms.push_back(std::sqrt(op.pairing(phi, phi)));
  const double hn = dom.ctx.cell_volume();
  for (std::size_t k = 0; k < rec.steps.size(); ++k) {
    const GridFunction& q = rec.steps[k].q;
    double gap = 0.0;
    for (std::size_t m = 0; m < bank.size(); ++m) {
      double acc = 0.0;
      for (std::size_t i : dom.interior) acc += (q[i] - last.rhs[i]) * bank[m][i];
      gap = std::max(gap, std::abs(acc * hn) / norms[m]);
    }
    out.gaps.push_back(gap);
    out.table.rows.push_back({static_cast<double>(k), rec.steps[k].eps, gap});
  }
  out.violations = monotone_violations(out.gaps);
  out.table.passed = out.identity_discrepancy < 1e-12 && out.violations == 0;
  out.table.verdict = "pair identity discrepancy " + fmt(out.identity_discrepancy) + " (need < 1e-12), " +
                      std::to_string(out.violations) + " increases in the duality gap (need 0)";
  return out;
}

LevelSetCheck check_level_sets(const SweepRecord& rec, const std::vector<double>& deltas,
                               const std::vector<double>& r_list, const Shape& K) {
  if (rec.steps.empty()) throw PreconditionError("empty sweep record");
  const GridFunction& u0 = rec.steps.front().report.u;
  const Domain& dom = u0.domain();
  require_inside(dom, K, 2.0 * dom.ctx.h, "K");

  auto restrict_to = [](const std::vector<Point>& pts, const Shape& S) {
    std::vector<Point> out;
    for (const auto& p : pts)
      if (shape_contains(S, p)) out.push_back(p);
    return out;
  };
  auto directed = [](const std::vector<Point>& A, const std::vector<Point>& B) {
    if (A.empty()) return 0.0;
    if (B.empty()) return std::numeric_limits<double>::infinity();
    return hausdorff_gap(A, B).first;
  };
  const auto limit_K = restrict_to(rec.limit.interface.points, K);
  const auto limit_O = restrict_to(rec.limit.interface.points, dom.omega);

  LevelSetCheck out;
  out.table.name = "level_sets";
  out.table.columns = {"k", "eps", "delta", "gap_level_to_limit", "gap_limit_to_level"};
  for (double r : r_list) out.table.columns.push_back("inclusion_r" + fmt(r));
  out.gaps.assign(deltas.size(), {});
  // ok[r][k]: both inclusions hold at step k for every delta
  std::vector<std::vector<bool>> ok(r_list.size(), std::vector<bool>(rec.steps.size(), true));

  for (std::size_t k = 0; k < rec.steps.size(); ++k) {
    const GridFunction& u = rec.steps[k].report.u;
    double umin = std::numeric_limits<double>::infinity(), umax = -umin;
    for (std::size_t i : dom.interior)
      if (shape_contains(K, dom.ctx.coord(i))) {
        umin = std::min(umin, u[i]);
        umax = std::max(umax, u[i]);
      }
    for (std::size_t d = 0; d < deltas.size(); ++d) {
      const double delta = deltas[d];
      const Interface itf = extract_interface(u, delta).interface;
      const auto level_K = restrict_to(itf.points, K);
      const auto level_O = restrict_to(itf.points, dom.omega);
      if (level_K.empty() && !(delta > umin && delta < umax))
        throw PreconditionError("level " + fmt(delta) + " lies outside the range of u on K at step " +
                                std::to_string(k));
      const double fwd = directed(level_K, limit_O);
      const double back = directed(limit_K, level_O);
      std::vector<double> row{static_cast<double>(k), rec.steps[k].eps, delta, fwd, back};
      for (std::size_t q = 0; q < r_list.size(); ++q) {
        const bool inc = fwd < r_list[q] && back < r_list[q];
        row.push_back(inc ? 1.0 : 0.0);
        if (!inc) ok[q][k] = false;
      }
      out.table.rows.push_back(std::move(row));
      out.gaps[d].push_back(std::max(fwd, back));
    }
  }
  bool all_settle = true;
  for (std::size_t q = 0; q < r_list.size(); ++q) {
    std::optional<std::size_t> k0;
    for (std::size_t k = rec.steps.size(); k-- > 0;) {
      if (!ok[q][k]) break;
      k0 = k;
    }
    out.k0.push_back(k0);
    if (!k0) all_settle = false;
  }
  for (const auto& g : out.gaps) out.final_gaps.push_back(g.back());
  out.table.passed = all_settle;
  std::string v = "k0 per radius:";
  for (std::size_t q = 0; q < r_list.size(); ++q)
    v += " r=" + fmt(r_list[q]) + "->" + (out.k0[q] ? std::to_string(*out.k0[q]) : "undefined");
  out.table.verdict = v;
  return out;
}

int count_label_interfaces(const Partition& P) {
  const Domain& dom = *P.dom;
  const auto& c = dom.ctx;
  int count = 0;
  for (std::size_t i : dom.interior) {
    const auto mi = c.multi_index(i);
    for (int a = 0; a < c.n; ++a) {
      auto nb = mi;
      nb[a] += 1;
      if (nb[a] >= c.side) continue;
      const std::size_t j = c.index(nb[0], nb[1]);
      if (dom.in_omega(j) && P.labels[i] != P.labels[j]) ++count;
    }
  }
  return count;
}

PartitionSweep run_partition_sweep(const SweepPlan& plan, const FracOperator& op) {
  for (const auto& f : plan.f)
    if (f.interior_sup_norm() != 0.0) throw PreconditionError("partition sweeps need a zero source");
  PartitionSweep out;
  out.record = run_sweep(plan, op);
  const auto& wells = plan.pot.wells();
  for (const auto& st : out.record.steps) out.labels.push_back(Partition::nearest_well(st.report.u, wells));
  out.limit = out.labels.back();
  const auto& dom = op.domain();
  for (double a : wells) {
    bool seen = false;
    for (std::size_t i : dom.interior) seen = seen || out.limit.labels[i] == a;
    if (!seen) out.missing_wells.push_back(a);
  }
  out.table.name = "partition_energy";
  out.table.columns = {"k", "eps", "energy", "ratio", "interfaces"};
  const double Pa = partition_perimeter(out.limit, wells, op, Region::subset(plan.probe_region));
  if (Pa <= 0.0) {
    out.table.skipped = true;
    out.table.verdict = "trivial partition: no interface in the probe region";
    for (std::size_t k = 0; k < out.record.steps.size(); ++k)
      out.table.rows.push_back({static_cast<double>(k), out.record.steps[k].eps, out.record.steps[k].probe_energy,
                                std::numeric_limits<double>::quiet_NaN(),
                                static_cast<double>(count_label_interfaces(out.labels[k]))});
    return out;
  }
  const double denom = 0.5 * dom.ctx.c_ns * Pa;
  for (std::size_t k = 0; k < out.record.steps.size(); ++k) {
    const double E = out.record.steps[k].probe_energy;
    out.ratios.push_back(E / denom);
    out.table.rows.push_back({static_cast<double>(k), out.record.steps[k].eps, E, E / denom,
                              static_cast<double>(count_label_interfaces(out.labels[k]))});
  }
  const double last = out.ratios.back();
  out.table.passed = last >= 0.8 && last <= 1.2;
  out.table.verdict = "final ratio " + fmt(last) + " (need [0.8, 1.2])";
  if (!out.missing_wells.empty()) out.table.verdict += "; some wells missing from the final labels";
  return out;
}

}  // namespace fracac
