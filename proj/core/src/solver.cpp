#include "fracac/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "fracac/errors.hpp"

namespace fracac {

namespace {

void check_same(const GridFunction& a, const FracOperator& op, const char* what) {
  if (!same_discretization(a.domain(), op.domain()))
    throw ConfigError(what, "field lives on another grid");
}

Eigen::VectorXd gather(const GridFunction& u) {
  const auto& interior = u.domain().interior;
  Eigen::VectorXd x(static_cast<Eigen::Index>(interior.size()));
  for (std::size_t k = 0; k < interior.size(); ++k) x(static_cast<Eigen::Index>(k)) = u[interior[k]];
  return x;
}

GridFunction scatter(const Eigen::VectorXd& x, const GridFunction& g) {
  std::vector<double> vals(g.values().begin(), g.values().end());
  const auto& interior = g.domain().interior;
  for (std::size_t k = 0; k < interior.size(); ++k) vals[interior[k]] = x(static_cast<Eigen::Index>(k));
  return GridFunction(g.domain_ptr(), std::move(vals), g.tail());
}

double exterior_sup(const GridFunction& g) {
  double m = 0.0;
  for (std::size_t i : g.domain().exterior) m = std::max(m, std::abs(g[i]));
  if (g.tail())
    for (double v : g.tail()->values) m = std::max(m, std::abs(v));
  return m;
}

// Central-difference gradient magnitude of a box field at node i.
double grad_magnitude(const std::vector<double>& v, const FracContext& c, std::size_t i) {
  const auto mi = c.multi_index(i);
  double g2 = 0.0;
  for (int a = 0; a < c.n; ++a) {
    auto lo = mi, hi = mi;
    lo[a] = std::max(0, mi[a] - 1);
    hi[a] = std::min(c.side - 1, mi[a] + 1);
    const double span = (hi[a] - lo[a]) * c.h;
    if (span <= 0.0) continue;
    const double d = (v[c.index(hi[0], hi[1])] - v[c.index(lo[0], lo[1])]) / span;
    g2 += d * d;
  }
  return std::sqrt(g2);
}

}  // namespace

void SolveConfig::validate() const {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("eps", "must be positive");
  if (!(grad_tol > 0.0)) throw ConfigError("grad_tol", "must be positive");
  if (max_iter < 0) throw ConfigError("max_iter", "must be nonnegative");
  if (!(init_noise >= 0.0)) throw ConfigError("init_noise", "must be nonnegative");
  if (init == InitKind::custom && !custom_init) throw ConfigError("init", "custom init needs a field");
}

double total_energy(const GridFunction& u, const Potential& pot, const GridFunction& f, double eps,
                    const FracOperator& op) {
  check_same(u, op, "u");
  check_same(f, op, "f");
  const auto& c = op.ctx();
  const double e2s = std::pow(eps, 2.0 * c.s);
  double pot_sum = 0.0, src = 0.0;
  for (std::size_t i : op.domain().interior) {
    pot_sum += pot.W(u[i]);
    src += f[i] * u[i];
  }
  return op.sobolev_energy(u) + (pot_sum / e2s - src) * c.cell_volume();
}

GridFunction gradient(const GridFunction& u, const Potential& pot, const GridFunction& f, double eps,
                      const FracOperator& op) {
  check_same(u, op, "u");
  check_same(f, op, "f");
  const double e2s = std::pow(eps, 2.0 * op.ctx().s);
  const InteriorField lap = op.apply_all(u);
  std::vector<double> out(u.size(), 0.0);
  const auto& interior = op.domain().interior;
  for (std::size_t k = 0; k < interior.size(); ++k) {
    const std::size_t i = interior[k];
    out[i] = lap.values[k] + pot.W1(u[i]) / e2s - f[i];
  }
  return GridFunction(u.domain_ptr(), std::move(out));
}

GradientCheck check_gradient(const GridFunction& u, const Potential& pot, const GridFunction& f, double eps,
                             const FracOperator& op, const GridFunction& phi, double t) {
  check_same(phi, op, "phi");
  const auto& dom = op.domain();
  for (std::size_t i : dom.exterior)
    if (phi[i] != 0.0) throw PreconditionError("test function must vanish outside Ω");
  const GridFunction G = gradient(u, pot, f, eps, op);
  GradientCheck out;
  for (std::size_t i : dom.interior) out.analytic += G[i] * phi[i];
  out.analytic *= op.ctx().cell_volume();

  auto shifted = [&](double sign) {
    std::vector<double> v(u.values().begin(), u.values().end());
    for (std::size_t i : dom.interior) v[i] += sign * t * phi[i];
    return GridFunction(u.domain_ptr(), std::move(v), u.tail());
  };
  const double fp = total_energy(shifted(1.0), pot, f, eps, op);
  const double fm = total_energy(shifted(-1.0), pot, f, eps, op);
  out.finite_difference = (fp - fm) / (2.0 * t);
  const double scale = std::max(std::abs(out.analytic), std::abs(out.finite_difference));
  out.rel_error = scale > 0.0 ? std::abs(out.analytic - out.finite_difference) / scale : 0.0;
  return out;
}

GridFunction random_test_function(DomainPtr dom, std::uint64_t seed, int modes) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(-1.0, 1.0), phase(0.0, 2.0 * std::numbers::pi);
  const double diam = shape_diameter(dom->omega);
  std::uniform_real_distribution<double> freq(0.0, 6.0 * std::numbers::pi / diam);
  struct Mode {
    double a, kx, ky, b;
  };
  std::vector<Mode> ms;
  for (int m = 0; m < modes; ++m) ms.push_back({amp(rng), freq(rng), freq(rng), phase(rng)});
  const Shape omega = dom->omega;
  std::vector<double> v(dom->ctx.size(), 0.0);
  for (std::size_t i : dom->interior) {
    const Point p = dom->ctx.coord(i);
    double sum = 0.0;
    for (const auto& m : ms) sum += m.a * std::cos(m.kx * p[0] + (dom->ctx.n == 2 ? m.ky * p[1] : 0.0) + m.b);
    const double d = shape_boundary_distance(omega, p);
    v[i] = d * d * sum;
  }
  return GridFunction(dom, std::move(v));
}

GridFunction initial_guess(const GridFunction& g, const Potential& pot, const SolveConfig& cfg, const FracOperator& op) {
  check_same(g, op, "g");
  const auto& dom = op.domain();
  const auto& c = dom.ctx;
  std::vector<double> v(g.values().begin(), g.values().end());

  if (cfg.init == InitKind::custom) {
    check_same(*cfg.custom_init, op, "custom_init");
    for (std::size_t i : dom.interior) v[i] = (*cfg.custom_init)[i];
  } else {
    // Exterior extension: each Ω node takes the kernel-weighted mean of the
    // exterior data seen by its row.
    const InteriorSystem sys = op.interior_system(g);
    const Eigen::VectorXd rows = sys.matrix.rowwise().sum();
    for (std::size_t k = 0; k < dom.interior.size(); ++k) {
      const auto r = static_cast<Eigen::Index>(k);
      v[dom.interior[k]] = sys.load(r) / rows(r);
    }
    const auto& wells = pot.wells();
    if (cfg.init == InitKind::sign_of_g) {
      for (std::size_t i : dom.interior) {
        const double x = v[i];
        double best = x, bd = std::numeric_limits<double>::infinity();
        bool tie = false;
        for (double w : wells) {
          const double d = std::abs(w - x);
          if (d < bd - 1e-12) {
            bd = d;
            best = w;
            tie = false;
          } else if (std::abs(d - bd) <= 1e-12) {
            tie = true;
          }
        }
        v[i] = tie ? x : best;
      }
    } else if (cfg.init == InitKind::tanh_profile && wells.size() >= 2) {
      const double lo = wells.front(), hi = wells.back();
      const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
      std::vector<double> out = v;
      for (std::size_t i : dom.interior) {
        const double gm = grad_magnitude(v, c, i);
        const double off = v[i] - mid;
        double dist;
        if (gm > 1e-12)
          dist = off / gm;
        else
          dist = off == 0.0 ? 0.0 : std::copysign(1e6, off);
        out[i] = mid + half * std::tanh(dist / cfg.eps);
      }
      v = std::move(out);
    }
  }

  if (cfg.init_noise > 0.0) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> U(-cfg.init_noise, cfg.init_noise);
    for (std::size_t i : dom.interior) v[i] += U(rng);
  }
  return GridFunction(g.domain_ptr(), std::move(v), g.tail());
}

SolveReport solve(const GridFunction& g, const Potential& pot, const GridFunction& f, const SolveConfig& cfg,
                  const FracOperator& op) {
  cfg.validate();
  check_same(g, op, "g");
  check_same(f, op, "f");
  const PotentialReport prep = validate_conditions(pot);
  if (!prep.all_passed()) {
    std::string failed;
    for (const auto& chk : prep.checks)
      if (!chk.passed) failed += (failed.empty() ? "" : ", ") + chk.name;
    throw PreconditionError("potential fails conditions: " + failed);
  }

  const auto& dom = op.domain();
  const auto& c = dom.ctx;
  const double hn = c.cell_volume();
  const double e2s = std::pow(cfg.eps, 2.0 * c.s);
  const double alpha0 = std::pow(c.h, 2.0 * c.s) / 4.0;
  const auto M = static_cast<Eigen::Index>(dom.interior.size());

  const InteriorSystem sys = op.interior_system(g);
  const Eigen::MatrixXd& L = sys.matrix;
  Eigen::VectorXd fx(M);
  for (Eigen::Index k = 0; k < M; ++k) fx(k) = f[dom.interior[static_cast<std::size_t>(k)]];

  const GridFunction u0 = initial_guess(g, pot, cfg, op);
  Eigen::VectorXd x = gather(u0);
  Eigen::VectorXd r = L * x - sys.load;  // (-Δ)^s u on Ω
  Eigen::VectorXd G(M);
  auto form_gradient = [&] {
    for (Eigen::Index k = 0; k < M; ++k) G(k) = r(k) + pot.W1(x(k)) / e2s - fx(k);
  };
  form_gradient();

  SolveReport rep;
  rep.eps = cfg.eps;
  rep.s = c.s;
  double F = total_energy(u0, pot, f, cfg.eps, op);
  rep.energy_trace.push_back(F);

  Eigen::VectorXd x_prev, G_prev, d(M), Ld(M);
  std::mt19937_64 check_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  int it = 0;
  for (;; ++it) {
    if (!G.allFinite()) throw NumericalError("non-finite gradient at iteration " + std::to_string(it));
    double gsup = G.lpNorm<Eigen::Infinity>();
    if (gsup <= cfg.grad_tol && it % 50 != 0) {
      // confirm with a fresh residual before stopping
      r = L * x - sys.load;
      form_gradient();
      gsup = G.lpNorm<Eigen::Infinity>();
    }
    rep.grad_norm = gsup;
    if (gsup <= cfg.grad_tol) {
      rep.converged = true;
      break;
    }
    if (it >= cfg.max_iter) break;

    if (cfg.debug_gradient_checks && it % 50 == 0) {
      const GridFunction ui = scatter(x, g);
      const GridFunction phi = random_test_function(g.domain_ptr(), check_rng());
      const GradientCheck gc = check_gradient(ui, pot, f, cfg.eps, op, phi);
      if (gc.rel_error > 1e-5 && std::abs(gc.analytic - gc.finite_difference) > 1e-8 * (1.0 + std::abs(F)))
        throw NumericalError("gradient check failed at iteration " + std::to_string(it) +
                             ": rel error " + std::to_string(gc.rel_error));
    }

    double alpha = alpha0;
    if (cfg.step_rule == StepRule::bb_armijo && it > 0) {
      const Eigen::VectorXd sk = x - x_prev, yk = G - G_prev;
      const double sy = sk.dot(yk);
      if (sy > 0.0) alpha = std::clamp(sk.squaredNorm() / sy, 1e-6 * alpha0, 1e6 * alpha0);
    }
    d = -G;
    Ld.noalias() = L * d;
    const double gg = G.squaredNorm();
    const double dLd = d.dot(Ld);

    // F(x + a d) - F(x) = hⁿ[-a|G|² + a²/2 dᵀLd + ε^{-2s} Σ (W(x+ad) - W(x) - W'(x) a d)]
    auto delta_F = [&](double a) {
      double rem = 0.0;
      for (Eigen::Index k = 0; k < M; ++k) rem += pot.delta_W2(x(k), a * d(k));
      return hn * (-a * gg + 0.5 * a * a * dLd + rem / e2s);
    };
    double dF = delta_F(alpha);
    int halvings = 0;
    while (!(dF <= -1e-4 * alpha * hn * gg)) {
      if (++halvings > 60) {
        std::ostringstream os;
        os << "line search failed at iteration " << it << " (F=" << F << ", |G|=" << gsup << ", trace tail:";
        const std::size_t n0 = rep.energy_trace.size() > 5 ? rep.energy_trace.size() - 5 : 0;
        for (std::size_t q = n0; q < rep.energy_trace.size(); ++q) os << ' ' << rep.energy_trace[q];
        os << ")";
        throw NumericalError(os.str());
      }
      alpha *= 0.5;
      dF = delta_F(alpha);
    }

    x_prev = x;
    G_prev = G;
    x.noalias() += alpha * d;
    if ((it + 1) % 50 == 0)
      r = L * x - sys.load;
    else
      r.noalias() += alpha * Ld;
    form_gradient();
    F += dF;
    if (!std::isfinite(F)) throw NumericalError("non-finite energy at iteration " + std::to_string(it));
    rep.energy_trace.push_back(F);
  }

  rep.iterations = it;
  rep.u = scatter(x, g);
  rep.final_energy = total_energy(rep.u, pot, f, cfg.eps, op);
  {
    const InteriorField lap = op.apply_all(rep.u);
    double res = 0.0;
    for (std::size_t k = 0; k < dom.interior.size(); ++k) {
      const std::size_t i = dom.interior[k];
      res = std::max(res, std::abs(lap.values[k] + pot.W1(rep.u[i]) / e2s - f[i]));
    }
    rep.stationarity_residual = res;
  }
  if (!std::isfinite(rep.final_energy) || !std::isfinite(rep.stationarity_residual))
    throw NumericalError("non-finite result");

  double bound = std::max(1.0, exterior_sup(g));
  for (double w : pot.wells()) bound = std::max(bound, std::abs(w));
  rep.max_principle_bound = bound;
  rep.sup_u = rep.u.interior_sup_norm();
  const bool f_zero = f.interior_sup_norm() == 0.0;
  if (f_zero) {
    rep.max_principle_ok = rep.sup_u <= bound + 1e-8;
    // an unfinished iterate may overshoot; only a converged one is held to the bound
    if (rep.converged && rep.sup_u > bound + 1e-3)
      throw NumericalError("maximum principle violated: sup|u| = " + std::to_string(rep.sup_u) + " > " +
                           std::to_string(bound));
  }
  return rep;
}

StabilityReport stability_check(const GridFunction& u, const Potential& pot, const GridFunction& f, double eps,
                                const FracOperator& op, int trials, std::uint64_t seed, double stationarity_tol) {
  if (trials < 0) throw ConfigError("trials", "must be nonnegative");
  const GridFunction G = gradient(u, pot, f, eps, op);
  const double gsup = G.interior_sup_norm();
  if (gsup > stationarity_tol)
    throw PreconditionError("stability_check needs a stationary field (|gradient| = " + std::to_string(gsup) + ")");

  const auto& dom = op.domain();
  const double e2s = std::pow(eps, 2.0 * dom.ctx.s);
  const InteriorSystem sys = op.interior_system(u);
  Eigen::MatrixXd H = sys.matrix;
  for (std::size_t k = 0; k < dom.interior.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    H(r, r) += pot.W2(u[dom.interior[k]]) / e2s;
  }
  StabilityReport rep;
  rep.trials = trials;
  rep.min_rayleigh = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  for (int t = 0; t < trials; ++t) {
    const Eigen::VectorXd phi = gather(random_test_function(u.domain_ptr(), rng()));
    const double nn = phi.squaredNorm();
    if (nn == 0.0) continue;
    rep.min_rayleigh = std::min(rep.min_rayleigh, phi.dot(H * phi) / nn);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (H + H.transpose()), Eigen::EigenvaluesOnly);
  rep.min_eigenvalue = es.eigenvalues().minCoeff();
  if (trials == 0) rep.min_rayleigh = rep.min_eigenvalue;
  rep.stable = rep.min_rayleigh >= -1e-8 && rep.min_eigenvalue >= -1e-8;
  return rep;
}

}  // namespace fracac
