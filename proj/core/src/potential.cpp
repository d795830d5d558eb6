#include "fracac/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "fracac/errors.hpp"

namespace fracac {

namespace {

double horner(const std::vector<double>& c, double t) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * t + *it;
  return v;
}

std::vector<double> derivative(const std::vector<double>& c) {
  if (c.size() <= 1) return {0.0};
  std::vector<double> d(c.size() - 1);
  for (std::size_t k = 1; k < c.size(); ++k) d[k - 1] = static_cast<double>(k) * c[k];
  return d;
}

std::vector<double> trim(std::vector<double> c) {
  while (c.size() > 1 && c.back() == 0.0) c.pop_back();
  return c;
}

}  // namespace

Potential::Potential(Kind kind, std::vector<double> coeffs, std::vector<double> wells)
    : kind_(kind), c0_(trim(std::move(coeffs))), wells_(std::move(wells)) {
  if (c0_.empty()) throw ConfigError("potential", "empty coefficient list");
  for (double c : c0_)
    if (!std::isfinite(c)) throw ConfigError("potential", "non-finite coefficient");
  c1_ = derivative(c0_);
  c2_ = derivative(c1_);
  // taylor_[k] = coefficients of W^{(k)}/k!
  taylor_.push_back(c0_);
  std::vector<double> cur = c0_;
  for (std::size_t k = 1; k < c0_.size(); ++k) {
    cur = derivative(cur);
    std::vector<double> scaled = cur;
    double fact = 1.0;
    for (std::size_t q = 2; q <= k; ++q) fact *= static_cast<double>(q);
    for (double& v : scaled) v /= fact;
    taylor_.push_back(scaled);
  }
  std::sort(wells_.begin(), wells_.end());
}

double Potential::W(double t) const { return horner(c0_, t); }
double Potential::W1(double t) const { return horner(c1_, t); }
double Potential::W2(double t) const { return horner(c2_, t); }

double Potential::delta_W(double t, double d) const {
  double v = 0.0;
  double dk = d;
  for (std::size_t k = 1; k < taylor_.size(); ++k) {
    v += horner(taylor_[k], t) * dk;
    dk *= d;
  }
  return v;
}

double Potential::delta_W2(double t, double d) const {
  double v = 0.0;
  double dk = d * d;
  for (std::size_t k = 2; k < taylor_.size(); ++k) {
    v += horner(taylor_[k], t) * dk;
    dk *= d;
  }
  return v;
}

std::string Potential::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::quartic: os << "quartic"; break;
    case Kind::multiwell: os << "multiwell"; break;
    case Kind::polynomial: os << "polynomial"; break;
  }
  os << " wells=[";
  for (std::size_t k = 0; k < wells_.size(); ++k) os << (k ? "," : "") << wells_[k];
  os << "]";
  return os.str();
}

Potential make_quartic() { return Potential(Potential::Kind::quartic, {0.25, 0.0, -0.5, 0.0, 0.25}, {-1.0, 1.0}); }

Potential make_multiwell(const std::vector<double>& wells) {
  if (wells.size() < 2) throw ConfigError("potential.wells", "need at least two wells");
  for (std::size_t k = 1; k < wells.size(); ++k)
    if (!(wells[k] > wells[k - 1])) throw ConfigError("potential.wells", "wells must be strictly increasing");
  std::vector<double> c{1.0};
  for (double a : wells) {
    // multiply by (t - a)^2 = a^2 - 2a t + t^2
    std::vector<double> next(c.size() + 2, 0.0);
    for (std::size_t k = 0; k < c.size(); ++k) {
      next[k] += a * a * c[k];
      next[k + 1] += -2.0 * a * c[k];
      next[k + 2] += c[k];
    }
    c = std::move(next);
  }
  return Potential(Potential::Kind::multiwell, c, wells);
}

std::vector<double> real_roots(const std::vector<double>& coeffs, double imag_tol) {
  const auto c = trim(coeffs);
  const int d = static_cast<int>(c.size()) - 1;
  if (d < 1) return {};
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(d, d);
  for (int k = 0; k < d; ++k) comp(0, k) = -c[static_cast<std::size_t>(d - 1 - k)] / c.back();
  for (int k = 1; k < d; ++k) comp(k, k - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  std::vector<double> out;
  for (int k = 0; k < d; ++k) {
    const auto z = es.eigenvalues()(k);
    if (std::abs(z.imag()) <= imag_tol * std::max(1.0, std::abs(z))) out.push_back(z.real());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Potential make_polynomial(const std::vector<double>& coeffs) {
  const auto c = trim(coeffs);
  if (c.size() < 3) throw ConfigError("potential.coeffs", "polynomial potential must have degree >= 2");
  const auto d1 = derivative(c);
  double scale = 0.0;
  for (double v : c) scale = std::max(scale, std::abs(v));
  std::vector<double> wells;
  for (double r : real_roots(d1, 1e-6)) {
    // polish the critical point with Newton on W'
    const auto d2 = derivative(d1);
    for (int it = 0; it < 20; ++it) {
      const double g = horner(d2, r);
      if (g == 0.0) break;
      r -= horner(d1, r) / g;
    }
    if (std::abs(horner(c, r)) <= 1e-10 * std::max(1.0, scale)) {
      if (wells.empty() || std::abs(r - wells.back()) > 1e-8) wells.push_back(r);
    }
  }
  return Potential(Potential::Kind::polynomial, c, wells);
}

double eval_W(const Potential& pot, double t) { return pot.W(t); }
double eval_W1(const Potential& pot, double t) { return pot.W1(t); }
double eval_W2(const Potential& pot, double t) { return pot.W2(t); }

bool PotentialReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const ConditionCheck& c) { return c.passed; });
}

PotentialReport validate_conditions(const Potential& pot) {
  const auto& w = pot.wells();
  if (w.empty()) return validate_conditions(pot, -3.0, 3.0);
  return validate_conditions(pot, w.front() - 2.0, w.back() + 2.0);
}

PotentialReport validate_conditions(const Potential& pot, double lo, double hi) {
  PotentialReport rep;
  rep.sample_lo = lo;
  rep.sample_hi = hi;
  const auto& wells = pot.wells();

  {
    std::ostringstream os;
    os << "|Z| = " << wells.size();
    rep.checks.push_back({"well_count", wells.size() >= 2, os.str()});
  }

  bool well_ok = !wells.empty();
  std::ostringstream wd;
  for (double a : wells) {
    const double v = pot.W(a), d = pot.W1(a), dd = pot.W2(a);
    const bool ok = std::abs(v) <= 1e-10 && std::abs(d) <= 1e-10 && dd > 0.0;
    well_ok = well_ok && ok;
    wd << "a=" << a << ": W=" << v << " W'=" << d << " W''=" << dd << (ok ? "" : " (bad)") << "; ";
  }
  rep.checks.push_back({"well_conditions", well_ok, wd.str()});

  const long steps = std::lround((hi - lo) / 1e-3);
  double minW = std::numeric_limits<double>::infinity();
  double argmin = lo;
  const int p = pot.growth_exponent();
  double c_upper = 0.0, c_lower = 0.0;
  bool lower_finite = true;
  for (long k = 0; k <= steps; ++k) {
    const double t = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(steps);
    const double v = pot.W(t);
    if (v < minW) {
      minW = v;
      argmin = t;
    }
    const double g = std::abs(pot.W1(t));
    const double tp = std::pow(std::abs(t), p - 1);
    c_upper = std::max(c_upper, g / (tp + 1.0));
    if (tp - 1.0 > 0.0) {
      if (g == 0.0)
        lower_finite = false;
      else
        c_lower = std::max(c_lower, (tp - 1.0) / g);
    }
  }
  {
    std::ostringstream os;
    os << "min W = " << minW << " at t = " << argmin;
    rep.checks.push_back({"nonnegative", minW >= -1e-12, os.str()});
  }
  {
    // between wells W must stay strictly positive
    bool pos = true;
    std::ostringstream os;
    for (std::size_t k = 0; k + 1 < wells.size(); ++k) {
      const double a = wells[k], b = wells[k + 1];
      for (int q = 1; q < 1000; ++q) {
        const double t = a + (b - a) * q / 1000.0;
        if (!(pot.W(t) > 0.0)) {
          pos = false;
          os << "W(" << t << ") <= 0; ";
          break;
        }
      }
    }
    rep.checks.push_back({"positive_between_wells", pos, os.str()});
  }
  rep.best_C = lower_finite ? std::max({1.0, c_upper, c_lower}) : std::numeric_limits<double>::infinity();
  {
    std::ostringstream os;
    os << "p = " << p << ", C = " << rep.best_C;
    rep.checks.push_back({"growth", lower_finite && p >= 2, os.str()});
  }
  return rep;
}

}  // namespace fracac
