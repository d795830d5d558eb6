#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fracac/domain.hpp"
#include "fracac/errors.hpp"
#include "fracac/fraclap.hpp"
#include "fracac/geometry.hpp"
#include "fracac/potential.hpp"
#include "fracac/solver.hpp"

namespace fracac {

// Exterior data sign(x·ν) with ν at `angle` (1D: ν = +x), tanh-mollified over
// `width` when width > 0. The tail carries the far-field signs.
GridFunction sign_data(DomainPtr dom, double angle = 0.0, double width = 0.0);

// Smooth bump amplitude·exp(1 - 1/(1 - r²)), r = |x - center|/width, zero for r >= 1.
GridFunction bump_source(DomainPtr dom, Point center, double width, double amplitude);

struct SweepPlan {
  std::vector<double> eps_list;      // strictly decreasing
  std::vector<GridFunction> g;       // one per ε, or a single field used for all
  std::vector<GridFunction> f;       // one per ε, or a single field used for all
  Potential pot;
  Shape probe_region;                // Ω′, at least 4h inside Ω
  std::vector<double> deltas{0.0};   // level values
  std::vector<double> r_list{0.2};   // tube radii
  SolveConfig solve;                 // eps is overwritten per step
  bool warm_start = true;

  const GridFunction& g_at(std::size_t k) const { return g.size() == 1 ? g.front() : g.at(k); }
  const GridFunction& f_at(std::size_t k) const { return f.size() == 1 ? f.front() : f.at(k); }
  void validate(const Domain& dom) const;
};

struct SweepStep {
  double eps = 0.0;
  SolveReport report;
  double probe_energy = 0.0;                 // E(u_k, Ω′)
  std::vector<Interface> level_sets;         // one per plan delta
  std::optional<double> curvature_residual;  // empty when the extracted set has no boundary in Ω
  GridFunction q;                            // f_k - ε_k^{-2s} W'(u_k) on Ω
};

struct SweepRecord {
  std::vector<SweepStep> steps;
  PhaseSet limit;          // E_* from the smallest ε at the wells' midpoint
  double limit_level = 0.0;
  double well_lo = -1.0, well_hi = 1.0;  // values of u_* off and on E_*
  bool trivial_phase = false;
  double energy_bound = 0.0;  // sup_k F_{ε_k}
  double source_bound = 0.0;  // sup_k ε_k^{2s} ‖f_k‖_∞
  Shape probe_region;
};

// Thrown when a solve inside a sweep fails; carries the steps done so far.
class SweepError : public NumericalError {
 public:
  SweepError(const std::string& msg, SweepRecord partial) : NumericalError(msg), partial_(std::move(partial)) {}
  const SweepRecord& partial() const { return partial_; }

 private:
  SweepRecord partial_;
};

SweepRecord run_sweep(const SweepPlan& plan, const FracOperator& op);

// Record for stored fields u_k (one per ε of the plan) without solving. The
// exterior data of the plan is imposed; reports carry energies and gradients.
SweepRecord rebuild_record(const SweepPlan& plan, const std::vector<GridFunction>& fields, const FracOperator& op);

// Rows of doubles with named columns and a verdict.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  bool skipped = false;
  bool passed = false;
  std::string verdict;
};
void write_table_csv(std::ostream& os, const Table& t, int precision = 12);

// Number of k with a[k] > a[k-1] (increasing = false) or a[k] < a[k-1].
int monotone_violations(const std::vector<double>& a, bool increasing = false);

struct ConvergenceCheck {
  Table table;  // k, eps, sup
  std::vector<double> sups;
  int violations = 0;
  double final_sup = 0.0;
};

// sup over Ω′ minus the r-tube around ∂E_* of |u_k - u_*|. Decreasing up to
// one violation and final < 0.05.
ConvergenceCheck check_uniform_convergence(const SweepRecord& rec, double r);

// Log-log slope of |u_k(x) - u_*(x)| against ε_k at the node nearest x.
double pointwise_rate(const SweepRecord& rec, const Point& x);

struct EnergyPerimeterCheck {
  Table table;  // k, eps, energy, ratio
  double perimeter = 0.0;  // P_2s(E_*, Ω′)
  std::vector<double> ratios;
  int violations = 0;
};

// E(u_k, Ω′) / (2 c_{n,s} P_2s(E_*, Ω′)); final in [0.85, 1.15], monotone
// toward 1 up to one violation. Skipped for a trivial phase.
EnergyPerimeterCheck check_energy_perimeter(const SweepRecord& rec, const Shape& probe, const FracOperator& op);

struct LimitIdentity {
  GridFunction lhs;  // f_k - ε_k^{-2s} W'(u_k) on Ω
  GridFunction rhs;  // (c/2 ∫ |u_*(x) - u_*(y)|² K dy) u_*(x) on Ω
  double identity_discrepancy = 0.0;  // max over the random pair check
};

// Both sides of the limit identity at step k, plus the pointwise ±1 identity
// (u(x)-u(y))(φ(x)-φ(y)) = ½|u(x)-u(y)|²(u(x)φ(x)+u(y)φ(y)) on `pairs`
// random node pairs.
LimitIdentity limit_identity_field(const SweepRecord& rec, std::size_t k, const FracOperator& op,
                                   int pairs = 10000, std::uint64_t seed = 0);

// RHS of the limit identity for a ±1 field by direct kernel summation.
GridFunction limit_rhs(const GridFunction& u_star, const FracOperator& op);

struct DualityCheck {
  Table table;  // k, eps, gap
  std::vector<double> gaps;  // max_φ |⟨lhs_k - rhs, φ⟩| / ⟨(-Δ)^s φ, φ⟩^{1/2}
  double identity_discrepancy = 0.0;
  int violations = 0;
};

// Smooth test functions supported in `probe`.
std::vector<GridFunction> test_function_bank(DomainPtr dom, const Shape& probe, int count, std::uint64_t seed);

DualityCheck check_limit_identity(const SweepRecord& rec, const FracOperator& op, int bank_size = 20,
                                  std::uint64_t seed = 0);

struct LevelSetCheck {
  Table table;  // k, eps, delta, gap_level_to_limit, gap_limit_to_level, then one inclusion column per r
  std::vector<std::optional<std::size_t>> k0;  // per r; empty when the inclusions never settle
  std::vector<double> final_gaps;              // per delta, max of the two one-sided gaps at the last k
  std::vector<std::vector<double>> gaps;       // [delta][k], two-sided
};

// K = nodes of `K` (must sit at least 2h inside Ω).
LevelSetCheck check_level_sets(const SweepRecord& rec, const std::vector<double>& deltas,
                               const std::vector<double>& r_list, const Shape& K);

// Partitions: per-k nearest-well labels and the ratio
// E(u_k, Ω′) / ((c/2) 𝒫^a_2s(𝔈_*, Ω′)); final in [0.8, 1.2].
struct PartitionSweep {
  SweepRecord record;
  std::vector<Partition> labels;
  Partition limit;
  Table table;  // k, eps, energy, ratio, interfaces
  std::vector<double> ratios;
  std::vector<double> missing_wells;  // wells absent from the final labels on Ω
};

PartitionSweep run_partition_sweep(const SweepPlan& plan, const FracOperator& op);

// Adjacent Ω node pairs with different labels; the interface count in 1D.
int count_label_interfaces(const Partition& P);

// Distance from p to the interface (points in 1D, segments in 2D).
double distance_to_interface(const Interface& itf, const Point& p);

}  // namespace fracac
