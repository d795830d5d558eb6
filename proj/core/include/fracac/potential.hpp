#pragma once

#include <string>
#include <vector>

namespace fracac {

// Polynomial multi-well potential. Coefficients are stored in ascending
// powers of t for W itself; derivatives are formed once at construction.
class Potential {
 public:
  enum class Kind { quartic, multiwell, polynomial };

  Potential() = default;
  Potential(Kind kind, std::vector<double> coeffs, std::vector<double> wells);

  Kind kind() const { return kind_; }
  const std::vector<double>& coeffs() const { return c0_; }
  const std::vector<double>& w1_coeffs() const { return c1_; }
  const std::vector<double>& wells() const { return wells_; }
  int degree() const { return static_cast<int>(c0_.size()) - 1; }
  // Growth exponent p with |W'(t)| ~ |t|^{p-1}.
  int growth_exponent() const { return degree(); }

  double W(double t) const;
  double W1(double t) const;
  double W2(double t) const;
  // W(t + d) - W(t) from the Taylor expansion at t; no cancellation for small d.
  double delta_W(double t, double d) const;
  // W(t + d) - W(t) - W'(t) d, same expansion without the linear term.
  double delta_W2(double t, double d) const;

  std::string describe() const;

 private:
  Kind kind_ = Kind::polynomial;
  std::vector<double> c0_, c1_, c2_;
  std::vector<std::vector<double>> taylor_;  // all derivatives, k! divided out
  std::vector<double> wells_;
};

Potential make_quartic();
Potential make_multiwell(const std::vector<double>& wells);
// Wells are detected as real points with W = W' = 0.
Potential make_polynomial(const std::vector<double>& coeffs);

double eval_W(const Potential& pot, double t);
double eval_W1(const Potential& pot, double t);
double eval_W2(const Potential& pot, double t);

// Real roots of a polynomial (ascending coefficients) by companion eigenvalues.
std::vector<double> real_roots(const std::vector<double>& coeffs, double imag_tol = 1e-8);

struct ConditionCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct PotentialReport {
  std::vector<ConditionCheck> checks;
  double best_C = 0.0;  // smallest growth constant on the sample grid
  double sample_lo = 0.0, sample_hi = 0.0;
  bool all_passed() const;
};

// Samples [min well - 2, max well + 2] at step 1e-3 unless a range is given.
PotentialReport validate_conditions(const Potential& pot);
PotentialReport validate_conditions(const Potential& pot, double lo, double hi);

}  // namespace fracac
