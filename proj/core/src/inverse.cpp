#include "fracac/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/Dense>

namespace fracac {

namespace {

std::size_t distinct_count(std::vector<double> t) {
  std::sort(t.begin(), t.end());
  std::size_t n = 0;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (i == 0 || t[i] - t[i - 1] > 1e-12 * std::max(1.0, std::abs(t[i]))) ++n;
  return n;
}

Eigen::MatrixXd vandermonde(const std::vector<double>& t, int degree) {
  Eigen::MatrixXd A(static_cast<Eigen::Index>(t.size()), degree + 1);
  for (std::size_t i = 0; i < t.size(); ++i) {
    double p = 1.0;
    for (int k = 0; k <= degree; ++k) {
      A(static_cast<Eigen::Index>(i), k) = p;
      p *= t[i];
    }
  }
  return A;
}

double max_coeff_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < std::max(a.size(), b.size()); ++k) {
    const double x = k < a.size() ? a[k] : 0.0, y = k < b.size() ? b[k] : 0.0;
    d = std::max(d, std::abs(x - y));
  }
  return d;
}

double l2_over(const GridFunction& a, const GridFunction* b, const Shape& region) {
  const Domain& dom = a.domain();
  double s = 0.0;
  for (std::size_t i : dom.interior) {
    if (!shape_contains(region, dom.ctx.coord(i))) continue;
    const double d = a[i] - (b ? (*b)[i] : 0.0);
    s += d * d;
  }
  return std::sqrt(s * dom.ctx.cell_volume());
}

}  // namespace

double eval_poly(const std::vector<double>& coeffs, double t) {
  double v = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 0;) v = v * t + coeffs[k];
  return v;
}

void Measurement::validate() const {
  if (!dom) throw ConfigError("measurement", "no grid");
  if (V.empty()) throw ConfigError("V", "measurement window has no nodes");
  if (eps_list.empty()) throw ConfigError("eps_list", "no measurements");
  if (u.size() != eps_list.size() || lap.size() != eps_list.size())
    throw ConfigError("measurement", "one record per eps expected");
  for (std::size_t k = 0; k < eps_list.size(); ++k) {
    if (u[k].size() != V.size() || lap[k].size() != V.size()) throw ConfigError("measurement", "record size differs from V");
    for (std::size_t j = 0; j < V.size(); ++j)
      if (!std::isfinite(u[k][j]) || !std::isfinite(lap[k][j])) throw ConfigError("measurement", "non-finite value");
  }
  for (std::size_t i : V)
    if (!dom->in_omega(i)) throw ConfigError("V", "window nodes must lie in omega");
}

Measurement measure(const SweepRecord& rec, const Shape& V_shape, const GridFunction& f, const FracOperator& op,
                    double noise, std::uint64_t seed) {
  if (rec.steps.empty()) throw PreconditionError("empty sweep record");
  if (!(noise >= 0.0)) throw ConfigError("noise", "must be nonnegative");
  const auto& dom = op.domain();
  if (shape_dimension(V_shape) != dom.ctx.n) throw ConfigError("V", "dimension differs from the grid");
  Measurement m;
  m.dom = op.domain_ptr();
  m.s = dom.ctx.s;
  for (std::size_t i = 0; i < dom.ctx.size(); ++i) {
    if (!shape_contains(V_shape, dom.ctx.coord(i))) continue;
    if (!dom.in_omega(i)) throw ConfigError("V", "window " + shape_describe(V_shape) + " leaves omega");
    if (f[i] != 0.0) throw ConfigError("V", "window " + shape_describe(V_shape) + " meets the support of f");
    m.V.push_back(i);
  }
  if (m.V.empty()) throw ConfigError("V", "window " + shape_describe(V_shape) + " contains no grid nodes");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-noise, noise);
  for (const auto& st : rec.steps) {
    m.eps_list.push_back(st.eps);
    std::vector<double> u, lap;
    for (std::size_t i : m.V) {
      u.push_back(st.report.u[i]);
      lap.push_back(op.apply_pointwise(st.report.u, i));
    }
    if (noise > 0.0)
      for (std::size_t j = 0; j < m.V.size(); ++j) {
        u[j] += U(rng);
        lap[j] += U(rng);
      }
    m.u.push_back(std::move(u));
    m.lap.push_back(std::move(lap));
  }
  m.validate();
  return m;
}

W1Samples sample_W1_graph(const Measurement& meas) {
  meas.validate();
  if (!meas.u_known_on_V) throw PreconditionError("sampling W' needs u on V");
  W1Samples out;
  for (std::size_t k = 0; k < meas.eps_list.size(); ++k) {
    const double e2s = std::pow(meas.eps_list[k], 2.0 * meas.s);
    for (std::size_t j = 0; j < meas.V.size(); ++j) {
      out.t.push_back(meas.u[k][j]);
      out.w.push_back(-e2s * meas.lap[k][j]);
    }
  }
  const auto [lo, hi] = std::minmax_element(out.t.begin(), out.t.end());
  out.t_min = *lo;
  out.t_max = *hi;
  out.degenerate = out.t_max - out.t_min <= 1e-12 * std::max(1.0, std::abs(out.t_max));
  return out;
}

W1Fit fit_W1(const W1Samples& samples, int degree, const std::vector<double>& well_prior) {
  if (degree < 0) throw ConfigError("degree", "must be nonnegative");
  if (samples.t.size() != samples.w.size()) throw ConfigError("samples", "t and w differ in length");
  const int unknowns = degree + 1 - static_cast<int>(well_prior.size());
  std::ostringstream range;
  range << "samples span t in [" << samples.t_min << ", " << samples.t_max << "]";
  if (unknowns <= 0)
    throw RankDeficientError("more well constraints than coefficients; " + range.str(), samples.t_min, samples.t_max);
  if (distinct_count(samples.t) < static_cast<std::size_t>(unknowns))
    throw RankDeficientError("too few distinct abscissae for degree " + std::to_string(degree) + "; " + range.str(),
                             samples.t_min, samples.t_max);

  const Eigen::MatrixXd A = vandermonde(samples.t, degree);
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(samples.w.data(), static_cast<Eigen::Index>(samples.w.size()));

  // Null-space parametrization c = Z y of the constraints C c = 0.
  Eigen::MatrixXd Z = Eigen::MatrixXd::Identity(degree + 1, degree + 1);
  if (!well_prior.empty()) {
    const Eigen::MatrixXd C = vandermonde(well_prior, degree);
    Eigen::FullPivHouseholderQR<Eigen::MatrixXd> qc(C.transpose());
    if (qc.rank() < static_cast<Eigen::Index>(well_prior.size()))
      throw ConfigError("well_prior", "repeated wells in the prior");
    const Eigen::MatrixXd Q = qc.matrixQ();
    Z = Q.rightCols(unknowns);
  }
  const Eigen::MatrixXd AZ = A * Z;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(AZ);
  qr.setThreshold(1e-12);
  if (qr.rank() < unknowns)
    throw RankDeficientError("design matrix is rank deficient; " + range.str(), samples.t_min, samples.t_max);
  const Eigen::VectorXd y = qr.solve(w);
  const Eigen::VectorXd c = Z * y;

  W1Fit fit;
  fit.coeffs.assign(c.data(), c.data() + c.size());
  fit.residual = std::sqrt((AZ * y - w).squaredNorm() / static_cast<double>(w.size()));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(AZ);
  const auto& sv = svd.singularValues();
  const double ratio = sv(0) / sv(sv.size() - 1);
  fit.condition_number = ratio * ratio;
  fit.t_min = samples.t_min;
  fit.t_max = samples.t_max;
  return fit;
}

std::vector<double> pin_W(const std::vector<double>& w1, const std::vector<double>& wells) {
  std::vector<double> W(w1.size() + 1, 0.0);
  for (std::size_t k = 0; k < w1.size(); ++k) W[k + 1] = w1[k] / static_cast<double>(k + 1);
  std::vector<double> at = wells;
  if (at.empty()) {
    std::vector<double> w2;
    for (std::size_t k = 1; k < w1.size(); ++k) w2.push_back(static_cast<double>(k) * w1[k]);
    for (double r : real_roots(w1))
      if (eval_poly(w2, r) > 0.0) at.push_back(r);
  }
  if (!at.empty()) {
    double lo = std::numeric_limits<double>::infinity();
    for (double a : at) lo = std::min(lo, eval_poly(W, a));
    W[0] = -lo;
  }
  return W;
}

double relative_l2(const GridFunction& a, const GridFunction& b, const Shape& region) {
  const double diff = l2_over(a, &b, region);
  const double ref = l2_over(b, nullptr, region);
  return ref > 0.0 ? diff / ref : diff;
}

FRecovery recover_f(const SweepRecord& rec, const std::vector<double>& w1, const Shape& probe, const FracOperator& op,
                    const GridFunction* truth) {
  if (rec.steps.empty()) throw PreconditionError("empty sweep record");
  const auto& dom = op.domain();
  const auto& st = rec.steps.back();
  const GridFunction& u = st.report.u;
  const double e2s = std::pow(st.eps, 2.0 * dom.ctx.s);
  const InteriorField lap = op.apply_all(u);
  const GridFunction rhs = limit_rhs(rec.limit.indicator_field(), op);

  std::vector<double> a(u.size(), 0.0), b(u.size(), 0.0);
  FRecovery out;
  for (std::size_t k = 0; k < dom.interior.size(); ++k) {
    const std::size_t i = dom.interior[k];
    if (!shape_contains(probe, dom.ctx.coord(i))) continue;
    const double pot = eval_poly(w1, u[i]) / e2s;
    a[i] = lap.values[k] + pot;
    b[i] = pot + rhs[i];
    out.gap = std::max(out.gap, std::abs(a[i] - b[i]));
  }
  out.exact = GridFunction(u.domain_ptr(), std::move(a));
  out.limit = GridFunction(u.domain_ptr(), std::move(b));
  if (truth) {
    out.error_exact = relative_l2(out.exact, *truth, probe);
    out.error_limit = relative_l2(out.limit, *truth, probe);
    const double scale = truth->interior_sup_norm();
    const auto& c = dom.ctx;
    for (std::size_t i : dom.interior) {
      if (!shape_contains(probe, c.coord(i)) || (*truth)[i] == 0.0) continue;
      const auto mi = c.multi_index(i);
      for (int ax = 0; ax < c.n && !out.gibbs_risk; ++ax)
        for (int step : {-1, 1}) {
          auto nb = mi;
          nb[ax] += step;
          const std::size_t j = c.index(nb[0], nb[1]);
          if ((*truth)[j] == 0.0 && std::abs((*truth)[i]) > 1e-3 * scale) out.gibbs_risk = true;
        }
    }
  }
  return out;
}

InterfaceRecovery recover_interface_and_perimeter(const SweepRecord& rec, const std::vector<double>& deltas,
                                                  const std::vector<Shape>& regions, const FracOperator& op) {
  if (rec.steps.empty()) throw PreconditionError("empty sweep record");
  if (deltas.empty()) throw ConfigError("deltas", "need at least one level");
  const GridFunction& u = rec.steps.back().report.u;
  const double c = op.ctx().c_ns;
  InterfaceRecovery out;
  out.deltas = deltas;
  for (double d : deltas) {
    out.interfaces.push_back(extract_interface(u, d).interface);
    if (out.interfaces.back().empty()) out.trivial_phase = true;
  }
  const PhaseSet E = extract_interface(u, deltas.front());
  for (const Shape& r : regions) {
    PerimeterPair p;
    p.region = r;
    p.from_energy = op.sobolev_energy(u, Region::subset(r)) / (2.0 * c);
    p.direct = perimeter(E, op, Region::subset(r));
    out.perimeters.push_back(p);
  }
  return out;
}

std::vector<std::pair<double, double>> monotonicity_windows(const Potential& pot, double step) {
  std::vector<std::pair<double, double>> out;
  const auto& wells = pot.wells();
  const double reach = wells.back() - wells.front() + 2.0;
  for (double a : wells) {
    if (!(pot.W2(a) > 0.0)) {
      out.push_back({a, a});
      continue;
    }
    double lo = a, hi = a;
    while (lo - step > a - reach && pot.W2(lo - step) > 0.0) lo -= step;
    while (hi + step < a + reach && pot.W2(hi + step) > 0.0) hi += step;
    out.push_back({lo, hi});
  }
  return out;
}

Reconstruction reconstruct(const Dataset& d, const FracOperator& op, const HarnessOptions& opt, bool known_W) {
  Reconstruction r;
  if (known_W) {
    r.W1_fit.coeffs = d.pot.w1_coeffs();
    r.W_fit = d.pot.coeffs();
  } else {
    r.W1_fit = fit_W1(sample_W1_graph(d.measurement), opt.degree, opt.well_prior);
    r.W_fit = pin_W(r.W1_fit.coeffs, opt.well_prior);
  }
  r.f_rec = recover_f(d.record, r.W1_fit.coeffs, opt.probe, op);
  r.interface_rec = recover_interface_and_perimeter(d.record, {d.record.limit_level}, {opt.probe}, op);
  return r;
}

UniquenessVerdict uniqueness_harness(const Dataset& d1, const Dataset& d2, Variant variant, const FracOperator& op,
                                     const HarnessOptions& opt) {
  const bool v2 = variant == Variant::ii;
  const Measurement& m1 = d1.measurement;
  const Measurement& m2 = d2.measurement;
  m1.validate();
  m2.validate();
  if (!same_discretization(*m1.dom, *m2.dom) || !same_discretization(*m1.dom, op.domain()))
    throw ConfigError("datasets", "incomparable: different grids or domains");
  if (m1.V != m2.V) throw ConfigError("datasets", "incomparable: different windows");
  if (m1.eps_list != m2.eps_list) throw ConfigError("datasets", "incomparable: different eps lists");

  UniquenessVerdict v;
  v.variant = variant;
  const auto& c = op.ctx();
  std::size_t agree_window = 0, total = 0;
  std::vector<std::pair<double, double>> windows;
  if (v2) {
    if (d1.pot.coeffs() != d2.pot.coeffs())
      throw ConfigError("datasets", "variant ii needs the same known potential");
    windows = monotonicity_windows(d1.pot);
  }
  auto window_of = [&](double t) -> int {
    for (std::size_t q = 0; q < windows.size(); ++q)
      if (t > windows[q].first && t < windows[q].second) return static_cast<int>(q);
    return -1;
  };

  bool window_conflict = false;
  for (std::size_t k = 0; k < m1.eps_list.size(); ++k) {
    const double e2s = std::pow(m1.eps_list[k], 2.0 * m1.s);
    double worst = 0.0;
    std::size_t worst_j = 0;
    for (std::size_t j = 0; j < m1.V.size(); ++j) {
      const double du = std::abs(m1.u[k][j] - m2.u[k][j]);
      const double dl = std::abs(m1.lap[k][j] - m2.lap[k][j]);
      v.max_lap_diff = std::max(v.max_lap_diff, dl);
      double score = dl;
      if (!v2) {
        v.max_u_diff = std::max(v.max_u_diff, du);
        score = std::max(du, dl);
      } else {
        ++total;
        const int w1 = window_of(m1.u[k][j]), w2 = window_of(m2.u[k][j]);
        if (w1 >= 0 && w1 == w2) {
          ++agree_window;
          v.max_u_diff = std::max(v.max_u_diff, du);
          if (du > opt.tau_V) window_conflict = true;
        } else if (w1 >= 0 && w2 >= 0) {
          v.translate_ambiguity = true;
        }
      }
      if (score > worst) {
        worst = score;
        worst_j = j;
      }
    }
    if (worst > opt.tau_V && !v.distinguishing_k) {
      v.distinguishing_k = k;
      v.distinguishing_node = c.coord(m1.V[worst_j]);
      v.distinguishing_sample = std::array<double, 4>{m1.u[k][worst_j], -e2s * m1.lap[k][worst_j], m2.u[k][worst_j],
                                                      -e2s * m2.lap[k][worst_j]};
    }
  }
  if (v2) v.window_fraction = total ? static_cast<double>(agree_window) / static_cast<double>(total) : 0.0;
  v.measurements_agree = !v.distinguishing_k && !window_conflict;

  std::ostringstream os;
  if (!v.measurements_agree) {
    if (v.distinguishing_k)
      os << "measurements differ first at k=" << *v.distinguishing_k << " near x=" << (*v.distinguishing_node)[0];
    else
      os << "(-Δ)^s u agrees but u differs inside a monotonicity window";
    v.summary = os.str();
    return v;
  }

  const Reconstruction r1 = reconstruct(d1, op, opt, v2);
  const Reconstruction r2 = reconstruct(d2, op, opt, v2);
  v.coeff_diff = max_coeff_diff(r1.W1_fit.coeffs, r2.W1_fit.coeffs);
  {
    const double diff = l2_over(r1.f_rec.exact, &r2.f_rec.exact, opt.probe);
    const double ref = std::max(l2_over(r1.f_rec.exact, nullptr, opt.probe), l2_over(r2.f_rec.exact, nullptr, opt.probe));
    v.f_diff = ref > 0.0 ? diff / ref : diff;
  }
  {
    const auto& a = r1.interface_rec.interfaces.front().points;
    const auto& b = r2.interface_rec.interfaces.front().points;
    if (a.empty() && b.empty())
      v.interface_diff = 0.0;
    else if (a.empty() || b.empty())
      v.interface_diff = std::numeric_limits<double>::infinity();
    else {
      const auto g = hausdorff_gap(a, b);
      v.interface_diff = std::max(g.first, g.second);
    }
  }
  {
    const double p1 = r1.interface_rec.perimeters.front().direct, p2 = r2.interface_rec.perimeters.front().direct;
    const double ref = std::max(std::abs(p1), std::abs(p2));
    v.perimeter_diff = ref > 0.0 ? std::abs(p1 - p2) / ref : 0.0;
  }
  const double itol = opt.interface_tol > 0.0 ? opt.interface_tol : 2.0 * c.h;
  v.reconstructions_agree = v.coeff_diff <= opt.coeff_tol && v.f_diff <= opt.f_tol && v.interface_diff <= itol &&
                            v.perimeter_diff <= opt.perimeter_tol;
  os << "measurements agree; reconstructions " << (v.reconstructions_agree ? "agree" : "differ") << " (coeff "
     << v.coeff_diff << ", f " << v.f_diff << ", interface " << v.interface_diff << ", perimeter " << v.perimeter_diff
     << ")";
  v.summary = os.str();
  return v;
}

}  // namespace fracac
