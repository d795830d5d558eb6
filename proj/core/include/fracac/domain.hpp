#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace fracac {

// Points are stored with two coordinates; 1D code only reads [0].
using Point = std::array<double, 2>;

struct Interval {
  double a = -1.0;
  double b = 1.0;
};

struct Rectangle {
  double x0 = -1.0, x1 = 1.0;
  double y0 = -1.0, y1 = 1.0;
};

struct Disc {
  double cx = 0.0, cy = 0.0;
  double r = 1.0;
};

// Bounded open sets used for Ω, probe regions Ω′, measurement windows V.
using Shape = std::variant<Interval, Rectangle, Disc>;

int shape_dimension(const Shape& shape);
bool shape_contains(const Shape& shape, const Point& p);  // open set membership
double shape_diameter(const Shape& shape);
double shape_measure(const Shape& shape);
// Axis-aligned bounding box {lo, hi}.
std::pair<Point, Point> shape_bounds(const Shape& shape);
// Distance from p to the boundary of the shape (p may lie on either side).
double shape_boundary_distance(const Shape& shape, const Point& p);
std::string shape_describe(const Shape& shape);

// c_{n,s} = 4^s Γ(n/2+s) / (π^{n/2} |Γ(-s)|), the constant for which the
// fractional Laplacian has Fourier symbol |ξ|^{2s}.
double normalization_constant(int n, double s);

// Uniform grid on the box [-R, R]^n together with the kernel parameters.
struct FracContext {
  int n = 1;
  double s = 0.25;
  double c_ns = 0.0;
  double h = 0.01;
  double R = 8.0;
  int side = 0;  // nodes per axis, 2R/h + 1

  std::size_t size() const;
  Point coord(std::size_t idx) const;
  std::array<int, 2> multi_index(std::size_t idx) const;
  std::size_t index(int i, int j = 0) const;
  double cell_volume() const;  // h^n
  // Half-width of the box covered by the node cells, R + h/2.
  double extended_half_width() const { return R + 0.5 * h; }
};

struct Domain {
  FracContext ctx;
  Shape omega;
  std::vector<char> omega_mask;               // per box node
  std::vector<std::size_t> interior;          // Ω nodes, ascending
  std::vector<std::size_t> exterior;          // box nodes outside Ω
  std::vector<std::size_t> boundary_nodes;    // Ω nodes with an exterior lattice neighbour
  std::vector<std::ptrdiff_t> interior_slot;  // box index -> position in `interior`, or -1

  bool in_omega(std::size_t idx) const { return omega_mask[idx] != 0; }
  std::size_t interior_count() const { return interior.size(); }
};

using DomainPtr = std::shared_ptr<const Domain>;

// Validates s ∈ (0, ½), h > 0, 2R/h integral, and that Ω sits strictly inside
// the box with a margin of at least 3·diam(Ω)/2.
DomainPtr build_context(int n, double s, double h, double R, const Shape& omega);

// Region selector for energies and perimeters: Ω itself, a subregion Ω′ ⊂ Ω,
// or the whole space.
struct Region {
  enum class Kind { omega, subset, whole };
  Kind kind = Kind::omega;
  Shape shape{};

  static Region omega_region() { return {}; }
  static Region whole() { return {Kind::whole, {}}; }
  static Region subset(const Shape& s) { return {Kind::subset, s}; }
};

// Box node mask of a region. Throws ConfigError if a subset region contains
// nodes outside Ω; `whole` selects every box node.
std::vector<char> region_mask(const Domain& dom, const Region& region);

// Values beyond the box, constant along rays from `center`. In 1D there are
// always two sectors: 0 = (-inf, -R'), 1 = (R', inf). In 2D sector k covers
// polar angles [cuts[k], cuts[k+1]) about the center, cyclically; fewer than
// two cuts means one sector.
struct ExteriorTail {
  std::vector<double> cuts;
  std::vector<double> values;
  Point center{0.0, 0.0};

  static ExteriorTail constant(int n, double v);
  static ExteriorTail sides(double left, double right);
  // 2D: `above` on {(y - through)·normal > 0}, `below` elsewhere.
  static ExteriorTail halfplane(double angle_of_normal, double above, double below, Point through = {0.0, 0.0});

  std::size_t sector_count(int n) const;
  std::size_t sector_of(const Point& y, int n) const;
  double value_at(const Point& y, int n) const;
  bool is_constant() const;
  bool same_layout(const ExteriorTail& other) const { return cuts == other.cuts && center == other.center; }
  void validate(int n) const;
};

// Sampled field over all box nodes, with an optional value beyond the box.
class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(DomainPtr dom, std::vector<double> values,
               std::optional<ExteriorTail> tail = std::nullopt);

  static GridFunction constant(DomainPtr dom, double v, bool with_tail = true);
  static GridFunction sample(DomainPtr dom, const std::function<double(const Point&)>& fn,
                             std::optional<ExteriorTail> tail = std::nullopt);

  const Domain& domain() const { return *dom_; }
  const DomainPtr& domain_ptr() const { return dom_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }
  const std::optional<ExteriorTail>& tail() const { return tail_; }

  void set(std::size_t i, double v);
  void set_tail(std::optional<ExteriorTail> tail);

  double sup_norm() const;
  double interior_sup_norm() const;

 private:
  DomainPtr dom_;
  std::vector<double> values_;
  std::optional<ExteriorTail> tail_;
};

// Values on Ω nodes only, in the order of Domain::interior.
struct InteriorField {
  DomainPtr dom;
  std::vector<double> values;

  double sup_norm() const;
  // Box field holding these values on Ω and `fill` elsewhere.
  GridFunction to_grid(double fill = 0.0) const;
};

InteriorField restrict_to_interior(const GridFunction& u);

// Result equals g on exterior nodes and u on Ω nodes; the tail comes from g.
GridFunction impose_exterior(const GridFunction& u, const GridFunction& g);

// True if both functions live on the same grid and Ω.
bool same_discretization(const Domain& a, const Domain& b);

// CSV with columns x[,y],value at fixed precision.
void write_csv(std::ostream& os, const GridFunction& u, int precision = 12);
void write_csv(const std::string& path, const GridFunction& u, int precision = 12);
GridFunction read_csv(const std::string& path, DomainPtr dom,
                      std::optional<ExteriorTail> tail = std::nullopt);

}  // namespace fracac
