#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fracac/asymptotics.hpp"
#include "fracac/domain.hpp"
#include "fracac/errors.hpp"
#include "fracac/fraclap.hpp"
#include "fracac/geometry.hpp"
#include "fracac/potential.hpp"

namespace fracac {

// Window data {u_k|_V, (-Δ)^s u_k|_V} for every ε_k of a sweep.
struct Measurement {
  DomainPtr dom;
  std::vector<std::size_t> V;             // Ω nodes, ascending
  std::vector<double> eps_list;
  std::vector<std::vector<double>> u;     // [k][slot in V]
  std::vector<std::vector<double>> lap;   // [k][slot in V]
  double s = 0.25;
  bool W_known = false;
  bool u_known_on_V = true;

  void validate() const;
};

// Records the window `V_shape` from a sweep. Throws ConfigError when V is empty
// or meets the support of f. `noise` adds independent uniform perturbations of
// that amplitude to both recorded quantities.
Measurement measure(const SweepRecord& rec, const Shape& V_shape, const GridFunction& f, const FracOperator& op,
                    double noise = 0.0, std::uint64_t seed = 0);

struct W1Samples {
  std::vector<double> t;  // u_k(x)
  std::vector<double> w;  // -ε_k^{2s} (-Δ)^s u_k(x) = W'(u_k(x)) since f = 0 on V
  double t_min = 0.0, t_max = 0.0;
  bool degenerate = false;  // every t_i equal, e.g. u_k ≡ well on V
};

W1Samples sample_W1_graph(const Measurement& meas);

// Least-squares fit needs more distinct abscissae than it has.
class RankDeficientError : public NumericalError {
 public:
  RankDeficientError(const std::string& msg, double t_min, double t_max)
      : NumericalError(msg), t_min_(t_min), t_max_(t_max) {}
  double t_min() const { return t_min_; }
  double t_max() const { return t_max_; }

 private:
  double t_min_, t_max_;
};

struct W1Fit {
  std::vector<double> coeffs;  // W' in ascending powers
  double residual = 0.0;       // RMS misfit
  double condition_number = 0.0;  // of the normal-equation (covariance) matrix
  double t_min = 0.0, t_max = 0.0;
};

// Polynomial least squares of the given degree; W'(a_j) = 0 is imposed
// exactly for each a_j in `well_prior`.
W1Fit fit_W1(const W1Samples& samples, int degree, const std::vector<double>& well_prior = {});

// Antiderivative of W' with the constant chosen so that the smallest value
// over `wells` is 0. Without wells, the local minima of the antiderivative are used.
std::vector<double> pin_W(const std::vector<double>& w1_coeffs, const std::vector<double>& wells = {});

double eval_poly(const std::vector<double>& coeffs, double t);

struct FRecovery {
  GridFunction exact;      // (a) (-Δ)^s u_k + ε_k^{-2s} W'(u_k) on Ω′
  GridFunction limit;      // (b) ε_k^{-2s} W'(u_k) + (c/2 ∫|u_*(x)-u_*(y)|² K dy) u_*(x) on Ω′
  double gap = 0.0;        // sup over Ω′ of |(a) - (b)|
  std::optional<double> error_exact, error_limit;  // relative L²(Ω′) against the true f, if given
  bool gibbs_risk = false;  // Ω′ contains cells at the edge of supp f
};

// Uses the finest step of the sweep. `truth` enables the error fields.
FRecovery recover_f(const SweepRecord& rec, const std::vector<double>& w1_coeffs, const Shape& probe,
                    const FracOperator& op, const GridFunction* truth = nullptr);

double relative_l2(const GridFunction& a, const GridFunction& b, const Shape& region);

struct PerimeterPair {
  Shape region;
  double from_energy = 0.0;  // E(u_finest, Ω′) / (2 c_{n,s})
  double direct = 0.0;       // P_2s of the extracted set
};

struct InterfaceRecovery {
  std::vector<double> deltas;
  std::vector<Interface> interfaces;  // one per delta
  bool trivial_phase = false;         // some level set is empty
  std::vector<PerimeterPair> perimeters;  // extracted at deltas.front()
};

InterfaceRecovery recover_interface_and_perimeter(const SweepRecord& rec, const std::vector<double>& deltas,
                                                  const std::vector<Shape>& regions, const FracOperator& op);

struct Reconstruction {
  W1Fit W1_fit;
  std::vector<double> W_fit;
  FRecovery f_rec;
  InterfaceRecovery interface_rec;
};

struct Dataset {
  SweepRecord record;
  Measurement measurement;
  Potential pot;  // used by variant ii
};

struct HarnessOptions {
  double tau_V = 1e-6;           // measurement agreement
  int degree = 3;
  std::vector<double> well_prior;
  Shape probe = Interval{-0.75, 0.75};
  double coeff_tol = 1e-2;       // W' coefficients
  double f_tol = 0.05;           // relative L² between the two f recoveries
  double interface_tol = 0.0;    // Hausdorff; 0 means 2h
  double perimeter_tol = 0.15;   // relative
};

// i: u and (-Δ)^s u known on V. ii: W known, only (-Δ)^s u on V.
enum class Variant { i, ii };

struct UniquenessVerdict {
  Variant variant = Variant::i;
  bool measurements_agree = false;
  std::optional<std::size_t> distinguishing_k;
  std::optional<Point> distinguishing_node;
  std::optional<std::array<double, 4>> distinguishing_sample;  // (t1, w1, t2, w2) in the W' graphs
  double max_u_diff = 0.0, max_lap_diff = 0.0;
  bool reconstructions_agree = false;
  double coeff_diff = 0.0, f_diff = 0.0, interface_diff = 0.0, perimeter_diff = 0.0;
  // variant ii: share of V where both fields lie in one monotonicity window of
  // W' (u agreement follows there), and whether a translate across wells was seen
  double window_fraction = 0.0;
  bool translate_ambiguity = false;
  std::string summary;
};

// Monotonicity windows of W' around each well: the largest interval where W'' > 0.
std::vector<std::pair<double, double>> monotonicity_windows(const Potential& pot, double step = 1e-4);

UniquenessVerdict uniqueness_harness(const Dataset& d1, const Dataset& d2, Variant variant, const FracOperator& op,
                                     const HarnessOptions& opt = {});

// W' from the window samples, or the dataset's own potential when `known_W`.
Reconstruction reconstruct(const Dataset& d, const FracOperator& op, const HarnessOptions& opt, bool known_W = false);

}  // namespace fracac
