#include "config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

namespace fracac::cli {

namespace {

// Object view that remembers which keys were read so leftovers can be rejected.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "config" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const json& at(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(field(key), "missing");
    return j_.at(key);
  }

  double num(const std::string& key, std::optional<double> dflt = std::nullopt) {
    if (!has(key)) {
      if (dflt) return *dflt;
      throw ConfigError(field(key), "missing");
    }
    const json& v = at(key);
    if (!v.is_number()) throw ConfigError(field(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(field(key), "must be finite");
    return x;
  }

  long integer(const std::string& key, long dflt) {
    if (!has(key)) return dflt;
    const json& v = at(key);
    if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer");
    return v.get<long>();
  }

  bool boolean(const std::string& key, bool dflt) {
    if (!has(key)) return dflt;
    const json& v = at(key);
    if (!v.is_boolean()) throw ConfigError(field(key), "expected true or false");
    return v.get<bool>();
  }

  std::string str(const std::string& key, std::optional<std::string> dflt = std::nullopt) {
    if (!has(key)) {
      if (dflt) return *dflt;
      throw ConfigError(field(key), "missing");
    }
    const json& v = at(key);
    if (!v.is_string()) throw ConfigError(field(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> nums(const std::string& key, std::vector<double> dflt = {}) {
    if (!has(key)) return dflt;
    const json& v = at(key);
    if (!v.is_array()) throw ConfigError(field(key), "expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError(field(key), "expected an array of numbers");
      out.push_back(x.get<double>());
      if (!std::isfinite(out.back())) throw ConfigError(field(key), "entries must be finite");
    }
    return out;
  }

  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string one_of(const std::string& v, const std::vector<std::string>& allowed, const std::string& field) {
  for (const auto& a : allowed)
    if (v == a) return v;
  std::string list;
  for (const auto& a : allowed) list += (list.empty() ? "" : "|") + a;
  throw ConfigError(field, "'" + v + "' is not one of " + list);
}

ContextBlock parse_context(const json& j) {
  Obj o(j, "context");
  ContextBlock c;
  c.n = static_cast<int>(o.integer("n", 1));
  c.s = o.num("s", 0.25);
  c.h = o.num("h", 0.01);
  c.R = o.num("R", 8.0);
  if (o.has("omega")) c.omega = parse_shape(o.at("omega"), "context.omega");
  o.done();
  return c;
}

SourceBlock parse_source(const json& j) {
  Obj o(j, "source");
  SourceBlock s;
  s.kind = one_of(o.str("kind", "none"), {"none", "bump"}, "source.kind");
  if (s.kind == "bump") {
    const auto c = o.nums("center", {0.0});
    if (c.empty() || c.size() > 2) throw ConfigError("source.center", "expected 1 or 2 coordinates");
    s.center = {c[0], c.size() > 1 ? c[1] : 0.0};
    s.width = o.num("width", 0.2);
    s.amplitude = o.num("amplitude", 1.0);
    s.support_check = o.boolean("support_check", true);
    if (!(s.width > 0.0)) throw ConfigError("source.width", "must be positive");
  }
  o.done();
  return s;
}

ExteriorBlock parse_exterior(const json& j) {
  Obj o(j, "exterior");
  ExteriorBlock e;
  e.kind = one_of(o.str("kind", "mollified_sign"), {"sign", "mollified_sign", "wells_map", "constant"}, "exterior.kind");
  e.angle = o.num("angle", 0.0);
  if (e.kind == "mollified_sign") {
    e.mollification_width = o.num("mollification_width", 0.05);
    if (!(e.mollification_width > 0.0)) throw ConfigError("exterior.mollification_width", "must be positive");
  }
  if (e.kind == "wells_map") {
    e.values = o.nums("values");
    if (e.values.size() < 2) throw ConfigError("exterior.values", "give at least two sector values");
  }
  if (e.kind == "constant") e.value = o.num("value");
  o.done();
  return e;
}

SolveConfig parse_solve(const json& j) {
  Obj o(j, "solve");
  SolveConfig s;
  s.eps = o.num("eps", s.eps);
  s.max_iter = static_cast<int>(o.integer("max_iter", s.max_iter));
  s.grad_tol = o.num("grad_tol", s.grad_tol);
  const auto rule = one_of(o.str("step_rule", "bb_armijo"), {"bb_armijo", "fixed"}, "solve.step_rule");
  s.step_rule = rule == "fixed" ? StepRule::fixed : StepRule::bb_armijo;
  const auto init =
      one_of(o.str("init", "tanh_profile"), {"tanh_profile", "exterior_extension", "sign_of_g"}, "solve.init");
  s.init = init == "exterior_extension" ? InitKind::exterior_extension
           : init == "sign_of_g"        ? InitKind::sign_of_g
                                        : InitKind::tanh_profile;
  s.init_noise = o.num("init_noise", 0.0);
  s.debug_gradient_checks = o.boolean("debug_gradient_checks", false);
  o.done();
  try {
    s.validate();
  } catch (const ConfigError& e) {
    throw ConfigError("solve." + e.field(), e.what());
  }
  return s;
}

SweepBlock parse_sweep(const json& j) {
  Obj o(j, "sweep");
  SweepBlock s;
  s.eps_list = o.nums("eps_list", s.eps_list);
  if (o.has("probe_region")) s.probe_region = parse_shape(o.at("probe_region"), "sweep.probe_region");
  if (o.has("K")) s.K = parse_shape(o.at("K"), "sweep.K");
  s.deltas = o.nums("deltas", s.deltas);
  s.r_list = o.nums("r_list", s.r_list);
  s.warm_start = o.boolean("warm_start", true);
  o.done();
  return s;
}

InverseBlock parse_inverse(const json& j) {
  Obj o(j, "inverse");
  InverseBlock inv;
  if (o.has("V")) inv.V = parse_shape(o.at("V"), "inverse.V");
  inv.variant = one_of(o.str("variant", "i"), {"i", "ii"}, "inverse.variant") == "ii" ? Variant::ii : Variant::i;
  if (o.has("degree")) {
    inv.degree = static_cast<int>(o.integer("degree", 3));
    if (*inv.degree < 1) throw ConfigError("inverse.degree", "must be at least 1");
  }
  inv.well_prior = o.nums("well_prior");
  inv.noise = o.num("noise", 0.0);
  if (!(inv.noise >= 0.0)) throw ConfigError("inverse.noise", "must be nonnegative");
  if (o.has("probe")) inv.probe = parse_shape(o.at("probe"), "inverse.probe");
  o.done();
  return inv;
}

GeometryBlock parse_geometry(const json& j) {
  Obj o(j, "geometry");
  GeometryBlock g;
  if (o.has("set")) g.set = parse_shape(o.at("set"), "geometry.set");
  if (o.has("probes")) {
    const json& p = o.at("probes");
    if (!p.is_array()) throw ConfigError("geometry.probes", "expected an array of regions");
    for (std::size_t k = 0; k < p.size(); ++k)
      g.probes.push_back(parse_shape(p[k], "geometry.probes[" + std::to_string(k) + "]"));
  }
  o.done();
  return g;
}

OutputBlock parse_output(const json& j) {
  Obj o(j, "output");
  OutputBlock out;
  out.dir = o.str("dir", out.dir);
  out.plots = o.boolean("plots", true);
  out.precision = static_cast<int>(o.integer("precision", 12));
  if (out.precision < 1 || out.precision > 17) throw ConfigError("output.precision", "must lie in [1, 17]");
  o.done();
  return out;
}

void check_potential_json(const json& j) {
  Obj o(j, "potential");
  const auto kind = one_of(o.str("kind", "quartic"), {"quartic", "multiwell", "polynomial"}, "potential.kind");
  if (kind == "multiwell") o.nums("wells");
  if (kind == "polynomial") o.nums("coeffs");
  o.done();
}

Potential make_potential(const json& j) {
  const std::string kind = j.value("kind", "quartic");
  if (kind == "multiwell") return make_multiwell(j.at("wells").get<std::vector<double>>());
  if (kind == "polynomial") return make_polynomial(j.at("coeffs").get<std::vector<double>>());
  return make_quartic();
}

GridFunction exterior_data(const ExteriorBlock& e, const DomainPtr& dom, const Potential& pot) {
  const int n = dom->ctx.n;
  if (e.kind == "sign") return sign_data(dom, e.angle, 0.0);
  if (e.kind == "mollified_sign") return sign_data(dom, e.angle, e.mollification_width);
  if (e.kind == "constant") return GridFunction::constant(dom, e.value);

  for (double v : e.values) {
    bool is_well = false;
    for (double a : pot.wells()) is_well = is_well || std::abs(v - a) <= 1e-12 * std::max(1.0, std::abs(a));
    if (!is_well) throw ConfigError("exterior.values", "every sector value must be a well of the potential");
  }
  if (n == 1) {
    if (e.values.size() != 2) throw ConfigError("exterior.values", "1D wells_map takes [left, right]");
    const double lo = e.values[0], hi = e.values[1];
    return GridFunction::sample(dom, [&](const Point& p) { return p[0] < 0.0 ? lo : hi; },
                                ExteriorTail::sides(lo, hi));
  }
  ExteriorTail tail;
  const std::size_t m = e.values.size();
  for (std::size_t k = 0; k < m; ++k)
    tail.cuts.push_back(e.angle + 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(m));
  tail.values = e.values;
  tail.validate(n);
  return GridFunction::sample(dom, [&](const Point& p) { return tail.value_at(p, n); }, tail);
}

}  // namespace

Shape parse_shape(const json& j, const std::string& field) {
  Obj o(j, field);
  const auto type = one_of(o.str("type"), {"interval", "rectangle", "disc"}, field + ".type");
  Shape s;
  if (type == "interval") {
    Interval iv{o.num("a"), o.num("b")};
    if (!(iv.a < iv.b)) throw ConfigError(field, "interval needs a < b");
    s = iv;
  } else if (type == "rectangle") {
    Rectangle r{o.num("x0"), o.num("x1"), o.num("y0"), o.num("y1")};
    if (!(r.x0 < r.x1 && r.y0 < r.y1)) throw ConfigError(field, "rectangle needs x0 < x1 and y0 < y1");
    s = r;
  } else {
    Disc d{o.num("cx", 0.0), o.num("cy", 0.0), o.num("r")};
    if (!(d.r > 0.0)) throw ConfigError(field + ".r", "must be positive");
    s = d;
  }
  o.done();
  return s;
}

json shape_to_json(const Shape& s) {
  if (const auto* iv = std::get_if<Interval>(&s)) return {{"type", "interval"}, {"a", iv->a}, {"b", iv->b}};
  if (const auto* r = std::get_if<Rectangle>(&s))
    return {{"type", "rectangle"}, {"x0", r->x0}, {"x1", r->x1}, {"y0", r->y0}, {"y1", r->y1}};
  const auto& d = std::get<Disc>(s);
  return {{"type", "disc"}, {"cx", d.cx}, {"cy", d.cy}, {"r", d.r}};
}

ExperimentConfig parse_config(const json& j) {
  Obj o(j, "");
  ExperimentConfig cfg;
  cfg.raw = j;
  if (o.has("seed")) {
    const json& s = o.at("seed");
    if (!s.is_number_unsigned()) throw ConfigError("seed", "expected a nonnegative integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  if (o.has("context")) cfg.context = parse_context(o.at("context"));
  if (o.has("potential")) {
    cfg.potential = o.at("potential");
    check_potential_json(cfg.potential);
  }
  if (o.has("source")) cfg.source = parse_source(o.at("source"));
  if (o.has("exterior")) cfg.exterior = parse_exterior(o.at("exterior"));
  if (o.has("solve")) cfg.solve = parse_solve(o.at("solve"));
  if (o.has("sweep")) cfg.sweep = parse_sweep(o.at("sweep"));
  if (o.has("inverse")) cfg.inverse = parse_inverse(o.at("inverse"));
  if (o.has("geometry")) cfg.geometry = parse_geometry(o.at("geometry"));
  if (o.has("output")) cfg.output = parse_output(o.at("output"));
  o.done();
  cfg.solve.seed = derive_seed(cfg.seed, "solve");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", path + ": " + e.what());
  }
  return parse_config(j);
}

Experiment build(const ExperimentConfig& cfg) {
  Experiment ex;
  ex.cfg = cfg;
  const auto& c = cfg.context;
  try {
    ex.dom = build_context(c.n, c.s, c.h, c.R, c.omega);
  } catch (const ConfigError& e) {
    throw ConfigError("context", e.what());
  }
  try {
    ex.pot = make_potential(cfg.potential);
  } catch (const ConfigError& e) {
    throw ConfigError(e.field().empty() ? "potential" : e.field(), e.what());
  }
  ex.g = exterior_data(cfg.exterior, ex.dom, ex.pot);
  if (cfg.source.kind == "bump")
    ex.f = bump_source(ex.dom, cfg.source.center, cfg.source.width, cfg.source.amplitude);
  else
    ex.f = GridFunction::constant(ex.dom, 0.0);
  return ex;
}

namespace {

// Smallest distance from a point of the bump support to ∂Ω is positive.
bool bump_inside(const Experiment& ex) {
  const auto& s = ex.cfg.source;
  if (ex.dom->ctx.n == 1) return shape_contains(ex.dom->omega, {s.center[0] - s.width, 0.0}) &&
                                 shape_contains(ex.dom->omega, {s.center[0] + s.width, 0.0});
  for (int k = 0; k < 64; ++k) {
    const double t = 2.0 * std::numbers::pi * k / 64.0;
    if (!shape_contains(ex.dom->omega, {s.center[0] + s.width * std::cos(t), s.center[1] + s.width * std::sin(t)}))
      return false;
  }
  return true;
}

}  // namespace

void validate(const Experiment& ex) {
  const auto& cfg = ex.cfg;
  const int n = ex.dom->ctx.n;
  const auto rep = validate_conditions(ex.pot);
  for (const auto& c : rep.checks)
    if (!c.passed) throw ConfigError("potential", "condition " + c.name + " fails: " + c.detail);
  if (cfg.exterior.kind == "sign" || cfg.exterior.kind == "mollified_sign") {
    const auto& w = ex.pot.wells();
    if (w.front() != -1.0 || w.back() != 1.0)
      throw ConfigError("exterior.kind", "sign data needs outer wells at -1 and 1; use wells_map");
  }
  if (cfg.source.kind == "bump" && cfg.source.support_check && !bump_inside(ex))
    throw ConfigError("source", "support of the bump leaves " + shape_describe(ex.dom->omega));
  if (cfg.sweep) {
    try {
      make_plan(ex).validate(*ex.dom);
    } catch (const ConfigError& e) {
      throw ConfigError("sweep." + e.field(), e.what());
    }
    if (cfg.sweep->K && shape_dimension(*cfg.sweep->K) != n) throw ConfigError("sweep.K", "dimension differs from the grid");
  }
  if (cfg.inverse) {
    const auto& inv = *cfg.inverse;
    if (shape_dimension(inv.V) != n) throw ConfigError("inverse.V", "dimension differs from the grid");
    bool any = false;
    for (std::size_t i = 0; i < ex.dom->ctx.size(); ++i) {
      const Point p = ex.dom->ctx.coord(i);
      if (!shape_contains(inv.V, p)) continue;
      any = true;
      if (!ex.dom->in_omega(i)) throw ConfigError("inverse.V", shape_describe(inv.V) + " leaves omega");
      if (ex.f[i] != 0.0)
        throw ConfigError("inverse.V", shape_describe(inv.V) + " overlaps the support of the source (source.center, source.width)");
    }
    if (!any) throw ConfigError("inverse.V", shape_describe(inv.V) + " contains no grid nodes");
    if (inv.probe && shape_dimension(*inv.probe) != n) throw ConfigError("inverse.probe", "dimension differs from the grid");
    if (!cfg.sweep) throw ConfigError("inverse", "needs a sweep block");
    const int degree = inv.degree.value_or(2 * static_cast<int>(ex.pot.wells().size()) - 1);
    if (static_cast<int>(inv.well_prior.size()) >= degree + 1)
      throw ConfigError("inverse.well_prior", "more constraints than coefficients");
  }
  if (cfg.geometry) {
    if (shape_dimension(cfg.geometry->set) != n) throw ConfigError("geometry.set", "dimension differs from the grid");
    for (std::size_t k = 0; k < cfg.geometry->probes.size(); ++k)
      try {
        region_mask(*ex.dom, Region::subset(cfg.geometry->probes[k]));
      } catch (const ConfigError& e) {
        throw ConfigError("geometry.probes[" + std::to_string(k) + "]", e.what());
      }
  }
}

SweepPlan make_plan(const Experiment& ex) {
  if (!ex.cfg.sweep) throw ConfigError("sweep", "missing");
  const auto& sw = *ex.cfg.sweep;
  SweepPlan plan;
  plan.eps_list = sw.eps_list;
  plan.g = {ex.g};
  plan.f = {ex.f};
  plan.pot = ex.pot;
  plan.probe_region = sw.probe_region;
  plan.deltas = sw.deltas;
  plan.r_list = sw.r_list;
  plan.solve = ex.cfg.solve;
  plan.warm_start = sw.warm_start;
  return plan;
}

std::uint64_t derive_seed(std::uint64_t seed, const std::string& purpose) {
  std::vector<std::uint32_t> key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  for (char c : purpose) key.push_back(static_cast<unsigned char>(c));
  std::seed_seq seq(key.begin(), key.end());
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace fracac::cli
