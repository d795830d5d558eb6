#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fracac/asymptotics.hpp"

using namespace fracac;

namespace {

SweepPlan standard_plan(const DomainPtr& dom) {
  SweepPlan plan;
  plan.eps_list = {0.4, 0.2, 0.1, 0.05};
  plan.g = {sign_data(dom)};
  plan.f = {GridFunction::constant(dom, 0.0)};
  plan.pot = make_quartic();
  plan.probe_region = Interval{-0.75, 0.75};
  plan.deltas = {-0.5, 0.0, 0.5};
  plan.solve.grad_tol = 1e-9;
  return plan;
}

}  // namespace

TEST_CASE("symmetric sweep keeps the interface at the origin") {
  auto dom = build_context(1, 0.25, 0.01, 8.0, Interval{-1, 1});
  FracOperator op(dom);
  const auto plan = standard_plan(dom);
  const auto rec = run_sweep(plan, op);
  REQUIRE(rec.steps.size() == 4);
  CHECK_FALSE(rec.trivial_phase);
  CHECK(std::isfinite(rec.energy_bound));
  CHECK(rec.source_bound == 0.0);
  for (const auto& st : rec.steps) {
    CHECK(st.report.converged);
    const auto& pts = st.level_sets[1].points;
    REQUIRE(pts.size() == 1);
    CHECK(std::abs(pts[0][0]) <= 0.01);
    REQUIRE(st.curvature_residual.has_value());
  }
  // F_{ε_k} climbs toward its limit; the tail suprema are what stay bounded
  double tail_sup = -1.0;
  std::vector<double> tails;
  for (std::size_t k = rec.steps.size(); k-- > 0;) {
    tail_sup = std::max(tail_sup, rec.steps[k].report.final_energy);
    tails.insert(tails.begin(), tail_sup);
  }
  CHECK(monotone_violations(tails) == 0);
  CHECK(rec.energy_bound == tails.front());

  SUBCASE("far-field rate") {
    const double slope = pointwise_rate(rec, {0.8, 0.0});
    CHECK(slope >= 0.25);
    CHECK(slope <= 0.75);
  }
  SUBCASE("uniform convergence table decreases") {
    const auto conv = check_uniform_convergence(rec, 0.2);
    CHECK(conv.violations == 0);
    CHECK(conv.sups.size() == 4);
    CHECK_THROWS_AS(check_uniform_convergence(rec, 2.0), PreconditionError);
  }
  SUBCASE("energy ratio trends toward one") {
    const auto ep = check_energy_perimeter(rec, plan.probe_region, op);
    CHECK_FALSE(ep.table.skipped);
    CHECK(ep.violations == 0);
    for (std::size_t k = 1; k < ep.ratios.size(); ++k) CHECK(ep.ratios[k] > ep.ratios[k - 1]);
    CHECK(ep.ratios.back() < 1.0);

    const Shape half = Interval{-0.375, 0.375};
    const auto eh = check_energy_perimeter(rec, half, op);
    CHECK(eh.perimeter < ep.perimeter);
    for (std::size_t k = 0; k < ep.ratios.size(); ++k)
      CHECK(eh.table.rows[k][2] < ep.table.rows[k][2]);
  }
  SUBCASE("limit identity") {
    const auto li = limit_identity_field(rec, 3, op);
    CHECK(li.identity_discrepancy < 1e-12);
    const auto du = check_limit_identity(rec, op);
    CHECK(du.violations == 0);
    CHECK(du.table.passed);
  }
  SUBCASE("level sets") {
    // ±0.9 is not reached on K until ε = 0.05
    CHECK_THROWS_AS(check_level_sets(rec, {0.9}, {0.1}, Interval{-0.9, 0.9}), PreconditionError);
    const auto ls = check_level_sets(rec, {-0.5, 0.0, 0.5}, {0.001, 0.5}, Interval{-0.9, 0.9});
    for (double g : ls.gaps[1]) CHECK(g <= 0.01);
    for (std::size_t k = 0; k < 4; ++k) {
      const double lo = ls.gaps[0][k], hi = ls.gaps[2][k];
      CHECK(std::max(lo, hi) <= 3.0 * std::min(lo, hi));
    }
    CHECK(monotone_violations(ls.gaps[0]) == 0);
    CHECK(monotone_violations(ls.gaps[2]) == 0);
    CHECK_FALSE(ls.k0[0].has_value());
    REQUIRE(ls.k0[1].has_value());
    CHECK_THROWS_AS(check_level_sets(rec, {0.0}, {0.1}, Interval{-0.99, 0.99}), ConfigError);
  }
  SUBCASE("warm starts land in the cold-start basin") {
    for (std::size_t k = 0; k < rec.steps.size(); ++k) {
      SolveConfig cfg = plan.solve;
      cfg.eps = plan.eps_list[k];
      const auto cold = solve(plan.g_at(k), plan.pot, plan.f_at(k), cfg, op);
      const double F = rec.steps[k].report.final_energy;
      CHECK(std::abs(cold.final_energy - F) < 1e-6 * std::abs(F));
    }
  }
}

TEST_CASE("limit rhs matches the one-sided kernel integral") {
  const double s = 0.3;
  auto dom = build_context(1, s, 0.01, 8.0, Interval{-1, 1});
  FracOperator op(dom);
  const auto E = PhaseSet::from_interval(dom, 0.0, std::numeric_limits<double>::infinity());
  const auto rhs = limit_rhs(E.indicator_field(), op);
  const double c = dom->ctx.c_ns;
  for (double x : {-0.5, -0.2, -0.05, 0.3, 0.7}) {
    const std::size_t i = dom->ctx.index(static_cast<int>(std::lround((x + 8.0) / 0.01)));
    const double d = std::abs(dom->ctx.coord(i)[0] + 0.005);  // cells of E start at -h/2
    const double sign = x < 0 ? -1.0 : 1.0;
    // d^{-2s}/(2s) averaged over the node cell
    const double p = 1 - 2 * s;
    const double avg = (std::pow(d + 0.005, p) - std::pow(d - 0.005, p)) / (p * 0.01);
    const double exact = 2.0 * c * avg / (2 * s) * sign;
    CHECK(std::abs(rhs[i] - exact) < 1e-3 * std::abs(exact));
  }
  auto bad = GridFunction::constant(dom, 0.5);
  CHECK_THROWS_AS(limit_rhs(bad, op), PreconditionError);
}

TEST_CASE("trivial phase sweep") {
  auto dom = build_context(1, 0.25, 0.01, 8.0, Interval{-1, 1});
  FracOperator op(dom);
  SweepPlan plan = standard_plan(dom);
  plan.g = {GridFunction::constant(dom, 1.0)};
  plan.deltas = {0.0};
  const auto rec = run_sweep(plan, op);
  CHECK(rec.trivial_phase);
  for (const auto& st : rec.steps) {
    for (std::size_t i : dom->interior) CHECK(std::abs(st.report.u[i] - 1.0) < 1e-9);
    CHECK_FALSE(st.curvature_residual.has_value());
  }
  const auto conv = check_uniform_convergence(rec, 0.2);
  for (double v : conv.sups) CHECK(v < 1e-9);
  CHECK(check_energy_perimeter(rec, plan.probe_region, op).table.skipped);
}

TEST_CASE("mesh refinement keeps the final sup") {
  double sup[2];
  int n = 0;
  for (double h : {0.01, 0.005}) {
    auto dom = build_context(1, 0.25, h, 8.0, Interval{-1, 1});
    FracOperator op(dom);
    const auto rec = run_sweep(standard_plan(dom), op);
    sup[n++] = check_uniform_convergence(rec, 0.2).final_sup;
  }
  CHECK(std::abs(sup[1] - sup[0]) < 0.5 * sup[1]);
}

TEST_CASE("plan validation") {
  auto dom = build_context(1, 0.25, 0.01, 8.0, Interval{-1, 1});
  FracOperator op(dom);
  SweepPlan plan = standard_plan(dom);
  plan.eps_list = {0.1, 0.2};
  CHECK_THROWS_AS(run_sweep(plan, op), ConfigError);
  plan = standard_plan(dom);
  plan.probe_region = Interval{-0.99, 0.5};
  CHECK_THROWS_AS(run_sweep(plan, op), ConfigError);
  plan = standard_plan(dom);
  plan.deltas = {1.0};
  CHECK_THROWS_AS(run_sweep(plan, op), ConfigError);
  plan = standard_plan(dom);
  plan.f = {plan.f[0], plan.f[0]};
  CHECK_THROWS_AS(run_sweep(plan, op), ConfigError);
}

TEST_CASE("partition sweeps") {
  auto dom = build_context(1, 0.25, 0.01, 8.0, Interval{-1, 1});
  FracOperator op(dom);
  SUBCASE("three wells") {
    SweepPlan plan = standard_plan(dom);
    plan.pot = make_multiwell({-1, 0, 1});
    plan.deltas = {0.0};
    const auto ps = run_partition_sweep(plan, op);
    REQUIRE(ps.labels.size() == 4);
    for (const auto& P : ps.labels) CHECK(count_label_interfaces(P) <= 2);
    CHECK(ps.table.rows.size() == 4);
    for (double r : ps.ratios) CHECK(std::isfinite(r));
  }
  SUBCASE("two wells reduce to the quartic sweep") {
    SweepPlan plan = standard_plan(dom);
    plan.pot = make_multiwell({-1, 1});
    const auto ps = run_partition_sweep(plan, op);
    // 4W at ε equals W at ε·4^{-1/(2s)}
    SweepPlan q = standard_plan(dom);
    for (double& e : q.eps_list) e *= std::pow(4.0, -1.0 / 0.5);
    const auto rec = run_sweep(q, op);
    for (std::size_t k = 0; k < 4; ++k) {
      double diff = 0.0;
      for (std::size_t i : dom->interior)
        diff = std::max(diff, std::abs(ps.record.steps[k].report.u[i] - rec.steps[k].report.u[i]));
      CHECK(diff < 1e-6);
      CHECK(ps.record.steps[k].level_sets[1].points[0][0] == doctest::Approx(rec.steps[k].level_sets[1].points[0][0]).epsilon(1e-6));
    }
  }
  SUBCASE("single well data") {
    SweepPlan plan = standard_plan(dom);
    plan.pot = make_multiwell({-1, 0, 1});
    plan.g = {GridFunction::constant(dom, 1.0)};
    plan.deltas = {0.0};
    const auto ps = run_partition_sweep(plan, op);
    CHECK(ps.table.skipped);
    CHECK(ps.missing_wells.size() == 2);
  }
  SUBCASE("nonzero source rejected") {
    SweepPlan plan = standard_plan(dom);
    plan.pot = make_multiwell({-1, 0, 1});
    plan.f = {GridFunction::constant(dom, 0.1)};
    CHECK_THROWS_AS(run_partition_sweep(plan, op), PreconditionError);
  }
}

TEST_CASE("tables serialize with a verdict line") {
  Table t{"demo", {"a", "b"}, {{1, 2}, {3, 4}}, false, true, "ok"};
  std::ostringstream os;
  write_table_csv(os, t);
  CHECK(os.str() == "a,b\n1,2\n3,4\n# PASS: ok\n");
  CHECK(monotone_violations({3, 2, 2.5, 1}) == 1);
  CHECK(monotone_violations({1, 2, 3}, true) == 0);
}

TEST_CASE("record rebuilt from stored fields") {
  auto dom = build_context(1, 0.25, 0.01, 8.0, Interval{-1, 1});
  FracOperator op(dom);
  auto plan = standard_plan(dom);
  plan.eps_list = {0.2, 0.1};
  const auto rec = run_sweep(plan, op);
  std::vector<GridFunction> fields;
  for (const auto& st : rec.steps) fields.push_back(st.report.u);
  const auto again = rebuild_record(plan, fields, op);
  REQUIRE(again.steps.size() == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(again.steps[k].report.final_energy == doctest::Approx(rec.steps[k].report.final_energy).epsilon(1e-13));
    CHECK(again.steps[k].report.grad_norm < 1e-8);
    CHECK(again.steps[k].probe_energy == rec.steps[k].probe_energy);
  }
  CHECK(again.limit.label == rec.limit.label);
  CHECK(again.energy_bound == doctest::Approx(rec.energy_bound).epsilon(1e-13));
  fields.pop_back();
  CHECK_THROWS_AS(rebuild_record(plan, fields, op), ConfigError);
}
