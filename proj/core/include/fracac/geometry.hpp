#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "fracac/domain.hpp"

namespace fracac {

class FracOperator;

// Extracted interface: crossing points (1D) or marching-squares segments (2D).
struct Interface {
  std::vector<Point> points;
  std::vector<std::array<Point, 2>> segments;
  bool empty() const { return points.empty(); }
};

// E as a ±1 label per box node (+1 = E) with ±1 tail values beyond the box.
struct PhaseSet {
  DomainPtr dom;
  std::vector<signed char> label;
  ExteriorTail tail;
  Interface interface;
  bool empty_interface = true;

  static PhaseSet from_predicate(DomainPtr dom, const std::function<bool(const Point&)>& in_E, ExteriorTail tail);
  // 1D: E = (a, b), either end may be infinite. Nodes with a <= x < b are in
  // E, so the union of their cells has length b - a on grid-aligned ends.
  static PhaseSet from_interval(DomainPtr dom, double a, double b);

  PhaseSet complement() const;
  // χ_E - χ_{Eᶜ} as a field with matching tail.
  GridFunction indicator_field() const;
};

// Labels drawn from the well values, tail likewise.
struct Partition {
  DomainPtr dom;
  std::vector<double> labels;
  ExteriorTail tail;

  // Nearest-well labelling of a field.
  static Partition nearest_well(const GridFunction& u, const std::vector<double>& wells);
  GridFunction field() const;
};

// Level set {u = δ}: label = sign(u - δ) (ties go to Eᶜ), interface by linear
// interpolation. An empty crossing set is flagged, not thrown.
PhaseSet extract_interface(const GridFunction& u, double delta);

// P_2s(E, region) with the three-term decomposition. `occupancy`, if given,
// replaces the 0/1 membership of box nodes by fractions in [0, 1].
double perimeter(const PhaseSet& E, const FracOperator& op, const Region& region = Region::omega_region());
double perimeter_occupancy(const PhaseSet& E, const std::vector<double>& occupancy, const FracOperator& op,
                           const Region& region);

// Point of the discrete boundary closest to x: a cell edge (1D) or edge
// midpoint (2D) between cells of different label. Throws PreconditionError if
// none lies within one cell.
struct BoundaryEdge {
  Point at;
  std::size_t inside;   // node on the E side
  std::size_t outside;  // node on the Eᶜ side
  int axis = 0;         // normal axis
};
BoundaryEdge snap_to_boundary(const PhaseSet& E, const Point& x);
std::vector<BoundaryEdge> boundary_edges(const PhaseSet& E);

// Nonlocal mean curvature H = -p.v.∫ (χ_E - χ_{Eᶜ})(y) |x-y|^{-n-2s} dy at the
// boundary point nearest x. Positive on the boundary of bounded convex sets.
double curvature_at(const PhaseSet& E, const FracOperator& op, const Point& x);

// max over boundary edges inside Ω of |c_{n,s} H - f|.
double curvature_residual(const PhaseSet& E, const GridFunction& f, const FracOperator& op);

using VectorField = std::function<Point(const Point&)>;

enum class VariationForm { surface, finite_difference };

// δP_2s(E, Ω)[X]. The surface form sums H (X·ν) over boundary edges in Ω; the
// finite-difference form moves E along x + tX for t = ±h/4 with sub-cell
// occupancy and differences the perimeter.
double first_variation(const PhaseSet& E, const VectorField& X, const FracOperator& op,
                       VariationForm form = VariationForm::surface);

// (1/2)[Σ_{R×R} + 2Σ_{R×Rᶜ}] (ℓ(x) - ℓ(y))² kernel.
double partition_perimeter(const Partition& P, const std::vector<double>& wells, const FracOperator& op,
                           const Region& region = Region::omega_region());

// One-sided sup-inf distances (sup_a d(a, B), sup_b d(b, A)).
std::pair<double, double> hausdorff_gap(const std::vector<Point>& A, const std::vector<Point>& B);

void write_interface_csv(std::ostream& os, const Interface& itf, int n, int precision = 12);
// Cells shaded by value, interface segments drawn on top (2D only).
void write_svg_overlay(std::ostream& os, const GridFunction& u, const Interface& itf, double view_half_width);

}  // namespace fracac
