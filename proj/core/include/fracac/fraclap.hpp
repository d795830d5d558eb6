#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <Eigen/Dense>

#include "fracac/domain.hpp"

namespace fracac {

namespace detail {
class WeightTable;
}

struct OperatorOptions {
  // Gauss order near the kernel singularity (2D only; 1D weights are closed form).
  int near_order = 20;
  // Neumaier-compensated inner sums.
  bool compensated = false;
};

// Dense linear system of the operator restricted to Ω nodes for fixed
// exterior data g: (-Δ)^s u on Ω = matrix·u_Ω - load.
struct InteriorSystem {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd load;
};

// Discrete fractional Laplacian. Fields are read as piecewise constant on the
// node cells; the weight between two nodes is the exact kernel integral
// between their cells divided by the cell volume, and the region beyond the
// box enters through per-sector tail coefficients.
class FracOperator {
 public:
  explicit FracOperator(DomainPtr dom, OperatorOptions opt = {});
  ~FracOperator();
  FracOperator(const FracOperator&) = delete;
  FracOperator& operator=(const FracOperator&) = delete;

  const Domain& domain() const { return *dom_; }
  const DomainPtr& domain_ptr() const { return dom_; }
  const FracContext& ctx() const { return dom_->ctx; }
  const OperatorOptions& options() const { return opt_; }

  // Kernel weight between distinct nodes i, j (cell integral / h^n).
  double weight(std::size_t i, std::size_t j) const;
  // Tail coefficients of node i for each sector of `layout`.
  std::vector<double> tail_row(std::size_t i, const ExteriorTail& layout) const;

  // Tail actually used for u: its own, or the constant value of the box's
  // outer ring. Throws PreconditionError if neither exists.
  ExteriorTail effective_tail(const GridFunction& u) const;

  double apply_pointwise(const GridFunction& u, std::size_t node) const;
  InteriorField apply_all(const GridFunction& u) const;

  // ⟨(-Δ)^s u, φ⟩ by the double-sum bilinear form. φ must vanish off Ω.
  double pairing(const GridFunction& u, const GridFunction& phi) const;

  // E(u, region) = c/4 [ Σ_{R×R} + 2 Σ_{R×Rᶜ} ] kernel·(u(x)-u(y))².
  double sobolev_energy(const GridFunction& u, const Region& region = Region::omega_region()) const;

  InteriorSystem interior_system(const GridFunction& g) const;

  // One stencil row as CSV: x[,y],weight plus one line per tail sector.
  void dump_stencil(std::ostream& os, std::size_t node) const;

  // Refreshes cached 2D tail rows for `nodes` (no-op in 1D).
  void prepare_tails(const ExteriorTail& layout, const std::vector<std::size_t>& nodes) const;

 private:
  const std::vector<double>& cached_tail(std::size_t i, const ExteriorTail& layout) const;
  double row_sum(std::size_t i, const GridFunction& u, const ExteriorTail& tail) const;

  DomainPtr dom_;
  OperatorOptions opt_;
  std::unique_ptr<detail::WeightTable> weights_;
  mutable std::mutex tail_mu_;
  mutable std::map<std::vector<double>, std::vector<std::vector<double>>> tail_cache_;
};

}  // namespace fracac
