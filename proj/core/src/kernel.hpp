#pragma once

#include <cstddef>
#include <vector>

#include "fracac/domain.hpp"

namespace fracac::detail {

// Unit-spacing 1D weight: ∫|t|^{-1-2s} Λ(t-d) dt with Λ the hat on [-1,1].
// Equals the cell-to-cell kernel integral divided by the cell length.
double omega_1d(long d, double s);

// Unit-spacing 2D weight with the bilinear pyramid; (0,0) is excluded.
double omega_2d(int dx, int dy, double s, int near_order);

// Translation-invariant stencil over the whole box, already scaled by h^{-2s}.
class WeightTable {
 public:
  WeightTable() = default;
  WeightTable(const FracContext& ctx, int near_order);

  double at(int dx, int dy = 0) const {
    const auto ax = static_cast<std::size_t>(dx < 0 ? -dx : dx);
    const auto ay = static_cast<std::size_t>(dy < 0 ? -dy : dy);
    return w_[ax + stride_ * ay];
  }
  double between(const FracContext& ctx, std::size_t i, std::size_t j) const {
    if (ctx.n == 1) return at(static_cast<int>(i) - static_cast<int>(j));
    const auto a = ctx.multi_index(i), b = ctx.multi_index(j);
    return at(a[0] - b[0], a[1] - b[1]);
  }
  int near_order() const { return near_order_; }

 private:
  std::vector<double> w_;
  std::size_t stride_ = 0;
  int near_order_ = 20;
};

// ∫ over {y outside the extended box, sector(y) = k} of |x-y|^{-n-2s} dy, for
// each tail sector k. In 1D with `cell_average` the integral is averaged over
// the cell [x-h/2, x+h/2], which makes cell sums exact.
std::vector<double> tail_coefficients(const FracContext& ctx, const ExteriorTail& layout, const Point& x,
                                      bool cell_average);

// ∫ of |z|^{-n-2s} over the cell centred at `offset` (in units of h) from an
// edge point, times h^{-2s}. In 2D the edge normal is along the first axis and
// offset = (i + 1/2, j).
double edge_cell_integral_1d(double offset_cells, double s, double h);

class EdgeCellTable {
 public:
  EdgeCellTable() = default;
  EdgeCellTable(const FracContext& ctx, int order);
  // i: signed cell index along the normal (cell centre at i + 1/2), j: tangential
  double at(int i, int j) const {
    const auto ai = static_cast<std::size_t>(i >= 0 ? i : -1 - i);
    const auto aj = static_cast<std::size_t>(j < 0 ? -j : j);
    return w_[ai + stride_ * aj];
  }

 private:
  std::vector<double> w_;
  std::size_t stride_ = 0;
};

}  // namespace fracac::detail
