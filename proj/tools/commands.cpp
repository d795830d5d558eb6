#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "config.hpp"
#include "plots.hpp"

namespace fs = std::filesystem;

namespace fracac::cli {

namespace {

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure after some outputs were written.
class RunFailure : public std::runtime_error {
 public:
  RunFailure(const std::string& msg, json extra) : std::runtime_error(msg), extra_(std::move(extra)) {}
  const json& extra() const { return extra_; }

 private:
  json extra_;
};

struct Ctx {
  std::ostream& out;
  std::ostream& err;
  int precision = 12;
};

// Doubles are rounded to the output precision so JSON text is stable.
double R(double v, int precision) {
  if (!std::isfinite(v)) return v;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return std::strtod(buf, nullptr);
}

json rounded(const std::vector<double>& v, int p) {
  json a = json::array();
  for (double x : v) a.push_back(R(x, p));
  return a;
}

json opt_num(const std::optional<double>& v, int p) { return v ? json(R(*v, p)) : json(nullptr); }

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw OutputError("output directory " + dir + ": " + ec.message());
  const fs::path probe = fs::path(dir) / ".write_probe";
  {
    std::ofstream t(probe);
    if (!t) throw OutputError("output directory " + dir + " is not writable");
  }
  fs::remove(probe, ec);
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw OutputError("cannot write " + p.string());
  return os;
}

void write_json(const fs::path& p, const json& j) {
  auto os = open_out(p);
  os << j.dump(2) << '\n';
}

void write_plot(const fs::path& p, const LinePlot& pl) {
  auto os = open_out(p);
  write_svg(os, pl);
}

void write_table(const fs::path& p, const Table& t, int precision) {
  auto os = open_out(p);
  write_table_csv(os, t, precision);
}

json table_summary(const Table& t) {
  return {{"passed", t.passed}, {"skipped", t.skipped}, {"verdict", t.verdict}};
}

Table skipped_table(const std::string& name, const std::string& why) {
  Table t;
  t.name = name;
  t.skipped = true;
  t.verdict = why;
  return t;
}

json points_json(const std::vector<Point>& pts, int n, int p) {
  json a = json::array();
  for (const auto& q : pts) a.push_back(n == 1 ? json::array({R(q[0], p)}) : json::array({R(q[0], p), R(q[1], p)}));
  return a;
}

json step_json(const SweepStep& st, int n, const std::vector<double>& deltas, int p) {
  json j{{"eps", st.eps},
         {"iterations", st.report.iterations},
         {"converged", st.report.converged},
         {"final_energy", R(st.report.final_energy, p)},
         {"probe_energy", R(st.probe_energy, p)},
         {"grad_norm", R(st.report.grad_norm, p)},
         {"stationarity_residual", R(st.report.stationarity_residual, p)},
         {"max_principle_ok", st.report.max_principle_ok},
         {"sup_u", R(st.report.sup_u, p)},
         {"curvature_residual", opt_num(st.curvature_residual, p)}};
  json ls = json::array();
  for (std::size_t d = 0; d < st.level_sets.size(); ++d)
    ls.push_back({{"delta", deltas[d]},
                  {"points", st.level_sets[d].points.size()},
                  {"segments", st.level_sets[d].segments.size()},
                  {"sample", n == 1 ? points_json(st.level_sets[d].points, n, p) : json::array()}});
  j["level_sets"] = ls;
  return j;
}

json record_json(const SweepRecord& rec, const std::vector<double>& deltas, int n, int p) {
  json steps = json::array();
  for (const auto& st : rec.steps) steps.push_back(step_json(st, n, deltas, p));
  return {{"steps", steps},
          {"limit_level", rec.limit_level},
          {"wells", {rec.well_lo, rec.well_hi}},
          {"trivial_phase", rec.trivial_phase},
          {"energy_bound", R(rec.energy_bound, p)},
          {"source_bound", R(rec.source_bound, p)},
          {"probe_region", shape_to_json(rec.probe_region)},
          {"limit_interface", n == 1 ? points_json(rec.limit.interface.points, n, p) : json::array()},
          {"limit_segments", rec.limit.interface.segments.size()}};
}

void write_failure(const fs::path& dir, const std::string& command, const std::string& kind, const std::string& msg,
                   const json& extra) {
  json j{{"command", command}, {"kind", kind}, {"message", msg}};
  if (extra.is_object())
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  std::ofstream os(dir / "failure.json");
  if (os) os << j.dump(2) << '\n';
}

void dump_stencils(const FracOperator& op, const std::vector<std::size_t>& nodes, const fs::path& dir) {
  for (std::size_t node : nodes) {
    if (node >= op.ctx().size()) throw ConfigError("--dump-stencil", "node index " + std::to_string(node) + " is outside the grid");
    auto os = open_out(dir / ("stencil_" + std::to_string(node) + ".csv"));
    op.dump_stencil(os, node);
  }
}

void flag_sharp_data(Ctx& cx, const Experiment& ex) {
  if (ex.cfg.exterior.kind == "sign")
    cx.err << "note: exterior.kind sign jumps across the interface; mollified_sign is the default\n";
}

// ---- forward --------------------------------------------------------------

void cmd_forward(Ctx& cx, const std::string& config, const std::string& out_dir, const std::vector<std::size_t>& stencil) {
  Experiment ex = build(load_config(config));
  validate(ex);
  flag_sharp_data(cx, ex);
  const int p = ex.cfg.output.precision;
  const fs::path dir = prepare_dir(out_dir.empty() ? ex.cfg.output.dir : out_dir);
  FracOperator op(ex.dom);
  dump_stencils(op, stencil, dir);
  const SolveReport rep = solve(ex.g, ex.pot, ex.f, ex.cfg.solve, op);
  write_csv((dir / "u.csv").string(), rep.u, p);
  write_json(dir / "report.json", {{"iterations", rep.iterations},
                                   {"final_energy", R(rep.final_energy, p)},
                                   {"grad_norm", R(rep.grad_norm, p)},
                                   {"stationarity_residual", R(rep.stationarity_residual, p)},
                                   {"max_principle_ok", rep.max_principle_ok},
                                   {"eps", rep.eps},
                                   {"s", rep.s}});
  if (!rep.converged)
    throw RunFailure("solver stopped after " + std::to_string(rep.iterations) + " iterations with gradient " +
                         std::to_string(rep.grad_norm),
                     {{"iterations", rep.iterations}, {"grad_norm", rep.grad_norm}});
  cx.out << "forward: " << rep.iterations << " iterations, F = " << rep.final_energy << '\n';
}

// ---- sweep ------------------------------------------------------------------

struct SweepTables {
  Table conv, energy, limit_iv, levelsets;
  std::optional<LevelSetCheck> ls;
  std::optional<EnergyPerimeterCheck> ep;
};

SweepTables sweep_tables(const Experiment& ex, const SweepRecord& rec, const FracOperator& op) {
  const auto& sw = *ex.cfg.sweep;
  SweepTables t;
  try {
    t.conv = check_uniform_convergence(rec, sw.r_list.front()).table;
  } catch (const PreconditionError& e) {
    t.conv = skipped_table("uniform convergence", e.what());
  }
  t.ep = check_energy_perimeter(rec, sw.probe_region, op);
  t.energy = t.ep->table;
  try {
    t.limit_iv = check_limit_identity(rec, op, 20, derive_seed(ex.cfg.seed, "test_functions")).table;
  } catch (const PreconditionError& e) {
    t.limit_iv = skipped_table("limit identity", e.what());
  }
  try {
    t.ls = check_level_sets(rec, sw.deltas, sw.r_list, sw.K.value_or(sw.probe_region));
    t.levelsets = t.ls->table;
  } catch (const PreconditionError& e) {
    t.levelsets = skipped_table("level sets", e.what());
  }
  return t;
}

std::vector<std::string> emit_plots(const Experiment& ex, const SweepRecord& rec, const SweepTables& t,
                                    const fs::path& dir, const std::optional<std::pair<W1Samples, W1Fit>>& fit) {
  std::vector<std::string> notes;
  const auto& dom = *ex.dom;
  const int n = dom.ctx.n;
  const auto [lo, hi] = shape_bounds(dom.omega);
  {
    auto os = open_out(dir / "profiles.svg");
    if (n == 1) {
      LinePlot pl{"u_k over the domain", "x", "u", {}, false, false};
      const double margin = 0.25 * (hi[0] - lo[0]);
      for (const auto& st : rec.steps) {
        Series s;
        std::ostringstream name;
        name << "eps=" << st.eps;
        s.name = name.str();
        for (std::size_t i = 0; i < dom.ctx.size(); ++i) {
          const double x = dom.ctx.coord(i)[0];
          if (x < lo[0] - margin || x > hi[0] + margin) continue;
          s.x.push_back(x);
          s.y.push_back(st.report.u[i]);
        }
        pl.series.push_back(std::move(s));
      }
      write_svg(os, pl);
    } else {
      const double view = 1.25 * std::max({std::abs(lo[0]), std::abs(lo[1]), std::abs(hi[0]), std::abs(hi[1])});
      write_svg_overlay(os, rec.steps.back().report.u, rec.limit.interface, view);
    }
  }
  if (rec.steps.size() < 2) {
    notes.push_back("energy_ratio.svg skipped: a single eps has no trend");
    notes.push_back("levelset_gaps.svg skipped: a single eps has no trend");
  } else {
    if (t.ep && !t.ep->table.skipped) {
      LinePlot pl{"energy / perimeter ratio", "eps", "E(u_k) / (2 c P)", {}, true, false};
      Series s{"ratio", {}, {}, false}, one{"1", {}, {}, false};
      for (std::size_t k = 0; k < rec.steps.size(); ++k) {
        s.x.push_back(rec.steps[k].eps);
        s.y.push_back(t.ep->ratios[k]);
        one.x.push_back(rec.steps[k].eps);
        one.y.push_back(1.0);
      }
      pl.series = {s, one};
      write_plot(dir / "energy_ratio.svg", pl);
    } else {
      notes.push_back("energy_ratio.svg skipped: " + t.energy.verdict);
    }
    if (t.ls) {
      LinePlot pl{"level set to limit interface", "eps", "Hausdorff gap", {}, true, true};
      const auto& deltas = ex.cfg.sweep->deltas;
      for (std::size_t d = 0; d < deltas.size(); ++d) {
        Series s;
        std::ostringstream name;
        name << "delta=" << deltas[d];
        s.name = name.str();
        for (std::size_t k = 0; k < rec.steps.size(); ++k) {
          s.x.push_back(rec.steps[k].eps);
          s.y.push_back(t.ls->gaps[d][k]);
        }
        pl.series.push_back(std::move(s));
      }
      Series h2{"2h", {}, {}, false};
      for (const auto& st : rec.steps) {
        h2.x.push_back(st.eps);
        h2.y.push_back(2.0 * dom.ctx.h);
      }
      pl.series.push_back(h2);
      write_plot(dir / "levelset_gaps.svg", pl);
    } else {
      notes.push_back("levelset_gaps.svg skipped: " + t.levelsets.verdict);
    }
  }
  if (fit) {
    const auto& [smp, f] = *fit;
    LinePlot pl{"W' samples and fit", "t", "W'(t)", {}, false, false};
    pl.series.push_back({"samples", smp.t, smp.w, true});
    Series c{"fit", {}, {}, false};
    const double a = std::min(smp.t_min, rec.well_lo) - 0.2, b = std::max(smp.t_max, rec.well_hi) + 0.2;
    for (int i = 0; i <= 200; ++i) {
      const double x = a + (b - a) * i / 200.0;
      c.x.push_back(x);
      c.y.push_back(eval_poly(f.coeffs, x));
    }
    pl.series.push_back(std::move(c));
    write_plot(dir / "wprime_fit.svg", pl);
  } else {
    notes.push_back("wprime_fit.svg skipped: no inverse block or no fit");
  }
  return notes;
}

void cmd_sweep(Ctx& cx, const std::string& config, const std::string& out_dir) {
  const ExperimentConfig cfg = load_config(config);
  if (!cfg.sweep) throw ConfigError("sweep", "missing");
  Experiment ex = build(cfg);
  validate(ex);
  flag_sharp_data(cx, ex);
  const int p = cfg.output.precision;
  const int n = ex.dom->ctx.n;
  const fs::path dir = prepare_dir(out_dir.empty() ? cfg.output.dir : out_dir);
  write_json(dir / "config.json", cfg.raw);
  FracOperator op(ex.dom);
  const SweepPlan plan = make_plan(ex);

  SweepRecord rec;
  try {
    rec = run_sweep(plan, op);
  } catch (const SweepError& e) {
    write_json(dir / "records.json", record_json(e.partial(), plan.deltas, n, p));
    for (std::size_t k = 0; k < e.partial().steps.size(); ++k)
      write_csv((dir / ("u_" + std::to_string(k) + ".csv")).string(), e.partial().steps[k].report.u, 17);
    throw RunFailure(e.what(), {{"completed_steps", e.partial().steps.size()}});
  }
  for (std::size_t k = 0; k < rec.steps.size(); ++k)
    write_csv((dir / ("u_" + std::to_string(k) + ".csv")).string(), rec.steps[k].report.u, 17);

  const SweepTables t = sweep_tables(ex, rec, op);
  write_table(dir / "conv.csv", t.conv, p);
  write_table(dir / "energy.csv", t.energy, p);
  write_table(dir / "limit_iv.csv", t.limit_iv, p);
  write_table(dir / "levelsets.csv", t.levelsets, p);

  std::optional<std::pair<W1Samples, W1Fit>> fit;
  if (cfg.inverse) {
    try {
      const auto meas = measure(rec, cfg.inverse->V, ex.f, op);
      auto smp = sample_W1_graph(meas);
      const int degree = cfg.inverse->degree.value_or(2 * static_cast<int>(ex.pot.wells().size()) - 1);
      auto f = fit_W1(smp, degree, cfg.inverse->well_prior);
      fit = std::make_pair(std::move(smp), std::move(f));
    } catch (const NumericalError& e) {
      cx.err << "note: W' fit for the plot failed: " << e.what() << '\n';
    }
  }
  json recj = record_json(rec, plan.deltas, n, p);
  recj["tables"] = {{"conv", table_summary(t.conv)},
                    {"energy", table_summary(t.energy)},
                    {"limit_iv", table_summary(t.limit_iv)},
                    {"levelsets", table_summary(t.levelsets)}};
  json notes = json::array();
  if (cfg.output.plots)
    for (const auto& note : emit_plots(ex, rec, t, dir, fit)) {
      notes.push_back(note);
      cx.err << "note: " << note << '\n';
    }
  recj["plot_notes"] = notes;
  write_json(dir / "records.json", recj);
  cx.out << "sweep: " << rec.steps.size() << " steps, final sup|u| = " << rec.steps.back().report.sup_u << '\n';
}

// ---- invert -----------------------------------------------------------------

struct Loaded {
  Experiment ex;
  std::unique_ptr<FracOperator> op;
  SweepRecord rec;
  Measurement meas;
};

Loaded load_run(const std::string& data_dir) {
  const fs::path dir(data_dir);
  if (!fs::exists(dir / "config.json")) throw ConfigError("--data", data_dir + " has no config.json (run sweep first)");
  Loaded L;
  L.ex = build(load_config((dir / "config.json").string()));
  validate(L.ex);
  if (!L.ex.cfg.inverse) throw ConfigError("inverse", "missing in " + (dir / "config.json").string());
  L.op = std::make_unique<FracOperator>(L.ex.dom);
  const SweepPlan plan = make_plan(L.ex);
  std::vector<GridFunction> fields;
  for (std::size_t k = 0; k < plan.eps_list.size(); ++k) {
    const fs::path f = dir / ("u_" + std::to_string(k) + ".csv");
    if (!fs::exists(f)) throw ConfigError("--data", "missing " + f.string());
    fields.push_back(read_csv(f.string(), L.ex.dom, L.ex.g.tail()));
  }
  L.rec = rebuild_record(plan, fields, *L.op);
  L.meas = measure(L.rec, L.ex.cfg.inverse->V, L.ex.f, *L.op, L.ex.cfg.inverse->noise,
                   derive_seed(L.ex.cfg.seed, "noise"));
  return L;
}

json verdict_json(const UniquenessVerdict& v, int p) {
  json j{{"variant", v.variant == Variant::i ? "i" : "ii"},
         {"measurements_agree", v.measurements_agree},
         {"max_u_diff", R(v.max_u_diff, p)},
         {"max_lap_diff", R(v.max_lap_diff, p)},
         {"reconstructions_agree", v.reconstructions_agree},
         {"coeff_diff", R(v.coeff_diff, p)},
         {"f_diff", R(v.f_diff, p)},
         {"interface_diff", R(v.interface_diff, p)},
         {"perimeter_diff", R(v.perimeter_diff, p)},
         {"summary", v.summary}};
  if (v.distinguishing_k) j["distinguishing_k"] = *v.distinguishing_k;
  if (v.distinguishing_node) j["distinguishing_node"] = {R((*v.distinguishing_node)[0], p), R((*v.distinguishing_node)[1], p)};
  if (v.distinguishing_sample) {
    const auto& s = *v.distinguishing_sample;
    j["distinguishing_sample"] = {{"t1", R(s[0], p)}, {"w1", R(s[1], p)}, {"t2", R(s[2], p)}, {"w2", R(s[3], p)}};
  }
  if (v.variant == Variant::ii) {
    j["window_fraction"] = R(v.window_fraction, p);
    j["translate_ambiguity"] = v.translate_ambiguity;
  }
  return j;
}

void cmd_invert(Ctx& cx, const std::string& data, const std::string& data2, std::string variant_flag,
                std::optional<int> degree_flag, const std::string& out_dir) {
  Loaded L = load_run(data);
  const auto& cfg = L.ex.cfg;
  const auto& inv = *cfg.inverse;
  const int p = cfg.output.precision;
  const int n = L.ex.dom->ctx.n;
  Variant variant = inv.variant;
  if (!variant_flag.empty()) variant = variant_flag == "ii" ? Variant::ii : Variant::i;
  const bool known_W = variant == Variant::ii;
  const fs::path dir = prepare_dir(out_dir.empty() ? (fs::path(cfg.output.dir) / "inv").string() : out_dir);

  HarnessOptions opt;
  opt.degree = degree_flag.value_or(inv.degree.value_or(2 * static_cast<int>(L.ex.pot.wells().size()) - 1));
  if (opt.degree < 1) throw ConfigError("--wprime-degree", "must be at least 1");
  opt.well_prior = inv.well_prior;
  opt.probe = inv.probe.value_or(cfg.sweep->probe_region);
  try {
    region_mask(*L.ex.dom, Region::subset(opt.probe));
  } catch (const ConfigError& e) {
    throw ConfigError("inverse.probe", e.what());
  }

  Dataset d1{L.rec, L.meas, L.ex.pot};
  if (known_W) {
    d1.measurement.W_known = true;
    d1.measurement.u_known_on_V = false;
  }
  W1Samples smp;
  Reconstruction r;
  try {
    if (!known_W) smp = sample_W1_graph(L.meas);
    r = reconstruct(d1, *L.op, opt, known_W);
  } catch (const RankDeficientError& e) {
    throw RunFailure(e.what(), {{"t_min", e.t_min()}, {"t_max", e.t_max()}});
  }
  const bool has_truth = cfg.source.kind != "none";
  const FRecovery fr = recover_f(L.rec, r.W1_fit.coeffs, opt.probe, *L.op, &L.ex.f);

  write_json(dir / "wfit.json", {{"degree", opt.degree},
                                 {"known_W", known_W},
                                 {"coefficients", rounded(r.W1_fit.coeffs, p)},
                                 {"W_coefficients", rounded(r.W_fit, p)},
                                 {"residual", R(r.W1_fit.residual, p)},
                                 {"condition_number", R(r.W1_fit.condition_number, p)},
                                 {"t_min", R(smp.t_min, p)},
                                 {"t_max", R(smp.t_max, p)},
                                 {"samples", smp.t.size()},
                                 {"degenerate", smp.degenerate},
                                 {"well_prior", opt.well_prior}});
  {
    auto os = open_out(dir / "f_rec.csv");
    os << (n == 1 ? "x," : "x,y,") << "exact,limit,truth\n" << std::setprecision(p);
    for (std::size_t i : L.ex.dom->interior) {
      const Point q = L.ex.dom->ctx.coord(i);
      if (!shape_contains(opt.probe, q)) continue;
      os << q[0] << ',';
      if (n == 2) os << q[1] << ',';
      os << fr.exact[i] << ',' << fr.limit[i] << ',' << L.ex.f[i] << '\n';
    }
  }
  {
    auto os = open_out(dir / "interface.csv");
    write_interface_csv(os, r.interface_rec.interfaces.front(), n, p);
  }
  json verdict{{"variant", known_W ? "ii" : "i"},
               {"trivial_phase", r.interface_rec.trivial_phase},
               {"f_gap", R(fr.gap, p)},
               {"gibbs_risk", fr.gibbs_risk},
               {"perimeters", json::array()}};
  if (has_truth) {
    verdict["f_error_exact"] = opt_num(fr.error_exact, p);
    verdict["f_error_limit"] = opt_num(fr.error_limit, p);
  }
  for (const auto& pp : r.interface_rec.perimeters)
    verdict["perimeters"].push_back({{"region", shape_to_json(pp.region)},
                                     {"from_energy", R(pp.from_energy, p)},
                                     {"direct", R(pp.direct, p)}});
  if (!data2.empty()) {
    Loaded L2 = load_run(data2);
    Dataset d2{L2.rec, L2.meas, L2.ex.pot};
    if (!same_discretization(*L.ex.dom, *L2.ex.dom))
      throw ConfigError("--data2", "incomparable: different grids or domains");
    // the second record is re-read on the first operator's grid
    const UniquenessVerdict v = uniqueness_harness(d1, d2, variant, *L.op, opt);
    verdict["uniqueness"] = verdict_json(v, p);
  }
  write_json(dir / "verdict.json", verdict);
  cx.out << "invert: W' coefficients";
  for (double c : r.W1_fit.coeffs) cx.out << ' ' << c;
  cx.out << '\n';
}

// ---- partition ----------------------------------------------------------------

void cmd_partition(Ctx& cx, const std::string& config, const std::string& out_dir) {
  const ExperimentConfig cfg = load_config(config);
  if (!cfg.sweep) throw ConfigError("sweep", "missing");
  Experiment ex = build(cfg);
  validate(ex);
  flag_sharp_data(cx, ex);
  const int p = cfg.output.precision;
  const fs::path dir = prepare_dir(out_dir.empty() ? cfg.output.dir : out_dir);
  FracOperator op(ex.dom);
  PartitionSweep ps;
  try {
    ps = run_partition_sweep(make_plan(ex), op);
  } catch (const SweepError& e) {
    throw RunFailure(e.what(), {{"completed_steps", e.partial().steps.size()}});
  }
  write_table(dir / "partition.csv", ps.table, p);
  write_csv((dir / "labels.csv").string(), ps.limit.field(), p);
  json counts = json::array();
  for (const auto& L : ps.labels) counts.push_back(ex.dom->ctx.n == 1 ? count_label_interfaces(L) : -1);
  write_json(dir / "records.json", {{"record", record_json(ps.record, cfg.sweep->deltas, ex.dom->ctx.n, p)},
                                    {"ratios", rounded(ps.ratios, p)},
                                    {"interfaces", counts},
                                    {"missing_wells", ps.missing_wells},
                                    {"table", table_summary(ps.table)}});
  cx.out << "partition: " << ps.table.verdict << '\n';
}

// ---- geometry ---------------------------------------------------------------------

PhaseSet geometry_set(const Experiment& ex, const std::string& field, double delta) {
  if (!field.empty()) return extract_interface(read_csv(field, ex.dom, ex.g.tail()), delta);
  if (!ex.cfg.geometry) throw ConfigError("geometry", "missing (or pass --field)");
  const Shape set = ex.cfg.geometry->set;
  if (const auto* iv = std::get_if<Interval>(&set)) return PhaseSet::from_interval(ex.dom, iv->a, iv->b);
  return PhaseSet::from_predicate(ex.dom, [&](const Point& q) { return shape_contains(set, q); },
                                  ExteriorTail::constant(ex.dom->ctx.n, -1.0));
}

void cmd_curvature(Ctx& cx, const std::string& config, const std::string& field, double delta, const std::string& out_dir) {
  Experiment ex = build(load_config(config));
  validate(ex);
  flag_sharp_data(cx, ex);
  const int p = ex.cfg.output.precision;
  const int n = ex.dom->ctx.n;
  const fs::path dir = prepare_dir(out_dir.empty() ? ex.cfg.output.dir : out_dir);
  FracOperator op(ex.dom);
  const PhaseSet E = geometry_set(ex, field, delta);
  const double c = op.ctx().c_ns;
  auto os = open_out(dir / "curvature.csv");
  os << (n == 1 ? "x," : "x,y,") << "H,cH_minus_f\n" << std::setprecision(p);
  std::size_t count = 0;
  for (const auto& e : boundary_edges(E)) {
    if (!shape_contains(ex.dom->omega, e.at)) continue;
    const double H = curvature_at(E, op, e.at);
    const double fa = 0.5 * (ex.f[e.inside] + ex.f[e.outside]);
    os << e.at[0] << ',';
    if (n == 2) os << e.at[1] << ',';
    os << H << ',' << c * H - fa << '\n';
    ++count;
  }
  json j{{"boundary_points", count}};
  try {
    j["residual"] = R(curvature_residual(E, ex.f, op), p);
  } catch (const PreconditionError& e) {
    j["residual"] = nullptr;
    j["note"] = e.what();
  }
  write_json(dir / "curvature.json", j);
  cx.out << "curvature: " << count << " boundary points\n";
}

void cmd_perimeter(Ctx& cx, const std::string& config, const std::string& field, double delta, const std::string& out_dir) {
  Experiment ex = build(load_config(config));
  validate(ex);
  flag_sharp_data(cx, ex);
  const int p = ex.cfg.output.precision;
  const fs::path dir = prepare_dir(out_dir.empty() ? ex.cfg.output.dir : out_dir);
  FracOperator op(ex.dom);
  const PhaseSet E = geometry_set(ex, field, delta);
  const GridFunction chi = E.indicator_field();
  const double c = op.ctx().c_ns;
  auto entry = [&](const Region& reg, json where) {
    const double P = perimeter(E, op, reg);
    const double viaE = op.sobolev_energy(chi, reg) / (2.0 * c);
    return json{{"region", where}, {"perimeter", R(P, p)}, {"energy_over_2c", R(viaE, p)},
                {"relative_gap", R(P > 0.0 ? std::abs(P - viaE) / P : std::abs(viaE), p)}};
  };
  json rows = json::array();
  rows.push_back(entry(Region::omega_region(), "omega"));
  if (ex.cfg.geometry)
    for (const auto& pr : ex.cfg.geometry->probes) rows.push_back(entry(Region::subset(pr), shape_to_json(pr)));
  write_json(dir / "perimeter.json", {{"regions", rows}});
  cx.out << "perimeter: P(E, omega) = " << rows[0]["perimeter"].get<double>() << '\n';
}

void cmd_validate(Ctx& cx, const std::string& config) {
  Experiment ex = build(load_config(config));
  validate(ex);
  flag_sharp_data(cx, ex);
  cx.out << "ok: " << config << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"fractional Allen-Cahn lab"};
  app.require_subcommand(1);
  Ctx cx{out, err};

  std::string config, out_dir, data, data2, variant, field;
  std::vector<std::size_t> stencil;
  int degree = 0;
  double delta = 0.0;

  auto* forward = app.add_subcommand("forward", "solve at one eps");
  forward->add_option("--config", config, "experiment JSON")->required();
  forward->add_option("--out", out_dir, "output directory (default: output.dir)");
  forward->add_option("--dump-stencil", stencil, "write the stencil row of these node indices");

  auto* sweep = app.add_subcommand("sweep", "solve along the eps list and tabulate the limit checks");
  sweep->add_option("--config", config)->required();
  sweep->add_option("--out", out_dir);

  auto* curvature = app.add_subcommand("curvature", "nonlocal mean curvature along a set boundary");
  curvature->add_option("--config", config)->required();
  curvature->add_option("--field", field, "take E = {u > delta} from this CSV instead of geometry.set");
  curvature->add_option("--delta", delta);
  curvature->add_option("--out", out_dir);

  auto* perim = app.add_subcommand("perimeter", "fractional perimeter of a set");
  perim->add_option("--config", config)->required();
  perim->add_option("--field", field);
  perim->add_option("--delta", delta);
  perim->add_option("--out", out_dir);

  auto* invert = app.add_subcommand("invert", "reconstruct W', f and the interface from a sweep directory");
  invert->add_option("--data", data, "sweep output directory")->required();
  invert->add_option("--data2", data2, "second sweep directory for the uniqueness check");
  invert->add_option("--variant", variant)->check(CLI::IsMember({"i", "ii"}));
  auto* deg = invert->add_option("--wprime-degree", degree);
  invert->add_option("--out", out_dir);

  auto* partition = app.add_subcommand("partition", "multiwell sweep and partition perimeter ratio");
  partition->add_option("--config", config)->required();
  partition->add_option("--out", out_dir);

  auto* validate_cmd = app.add_subcommand("validate", "check a config without running it");
  validate_cmd->add_option("--config", config)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  std::string command;
  fs::path fail_dir;
  for (auto* sc : app.get_subcommands()) command = sc->get_name();
  try {
    if (!out_dir.empty()) fail_dir = out_dir;
    if (forward->parsed()) cmd_forward(cx, config, out_dir, stencil);
    if (sweep->parsed()) cmd_sweep(cx, config, out_dir);
    if (curvature->parsed()) cmd_curvature(cx, config, field, delta, out_dir);
    if (perim->parsed()) cmd_perimeter(cx, config, field, delta, out_dir);
    if (invert->parsed())
      cmd_invert(cx, data, data2, variant, deg->count() ? std::optional<int>(degree) : std::nullopt, out_dir);
    if (partition->parsed()) cmd_partition(cx, config, out_dir);
    if (validate_cmd->parsed()) cmd_validate(cx, config);
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const OutputError& e) {
    err << "output error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::string kind = "numerical";
    json extra = json::object();
    if (const auto* rf = dynamic_cast<const RunFailure*>(&e)) extra = rf->extra();
    if (dynamic_cast<const PreconditionError*>(&e)) kind = "precondition";
    if (fail_dir.empty()) {
      try {
        if (!config.empty()) fail_dir = load_config(config).output.dir;
        else if (!data.empty()) fail_dir = fs::path(data) / "inv";
      } catch (const std::exception&) {
      }
    }
    err << "error: " << e.what() << '\n';
    if (!fail_dir.empty()) {
      std::error_code ec;
      fs::create_directories(fail_dir, ec);
      write_failure(fail_dir, command, kind, e.what(), extra);
    }
    return 1;
  }
}

}  // namespace fracac::cli
