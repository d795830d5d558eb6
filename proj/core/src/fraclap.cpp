#include "fracac/fraclap.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "fracac/errors.hpp"
#include "fracac/parallel.hpp"
#include "kernel.hpp"
#include "sum.hpp"

namespace fracac {

namespace {

// Cache key: the sector geometry only, never the values.
std::vector<double> tail_key(const ExteriorTail& layout) {
  if (layout.sector_count(2) <= 1) return {};
  std::vector<double> key = layout.cuts;
  key.push_back(layout.center[0]);
  key.push_back(layout.center[1]);
  return key;
}

}  // namespace

FracOperator::FracOperator(DomainPtr dom, OperatorOptions opt) : dom_(std::move(dom)), opt_(opt) {
  if (!dom_) throw ConfigError("operator", "null domain");
  if (opt_.near_order < 7) throw ConfigError("near_order", "near_order must be at least 7");
  weights_ = std::make_unique<detail::WeightTable>(dom_->ctx, opt_.near_order);
}

FracOperator::~FracOperator() = default;

double FracOperator::weight(std::size_t i, std::size_t j) const {
  if (i == j) throw PreconditionError("weight: zero offset is excluded");
  return weights_->between(dom_->ctx, i, j);
}

void FracOperator::prepare_tails(const ExteriorTail& layout, const std::vector<std::size_t>& nodes) const {
  if (ctx().n == 1) return;
  std::lock_guard lk(tail_mu_);
  const int n = 2;
  const std::vector<double> key = tail_key(layout);
  auto& rows = tail_cache_[key];
  if (rows.empty()) rows.resize(ctx().size());
  std::vector<std::size_t> todo;
  for (std::size_t i : nodes)
    if (rows[i].empty()) todo.push_back(i);
  ExteriorTail probe = layout;
  if (layout.sector_count(n) == 1) probe = ExteriorTail::constant(n, 0.0);
  parallel_for(todo.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const std::size_t i = todo[k];
      rows[i] = detail::tail_coefficients(ctx(), probe, ctx().coord(i), true);
    }
  });
}

const std::vector<double>& FracOperator::cached_tail(std::size_t i, const ExteriorTail& layout) const {
  const std::vector<double> key = tail_key(layout);
  {
    std::lock_guard lk(tail_mu_);
    auto it = tail_cache_.find(key);
    if (it != tail_cache_.end() && !it->second[i].empty()) return it->second[i];
  }
  prepare_tails(layout, {i});
  std::lock_guard lk(tail_mu_);
  return tail_cache_.at(key)[i];
}

std::vector<double> FracOperator::tail_row(std::size_t i, const ExteriorTail& layout) const {
  if (ctx().n == 1) return detail::tail_coefficients(ctx(), layout, ctx().coord(i), true);
  return cached_tail(i, layout);
}

ExteriorTail FracOperator::effective_tail(const GridFunction& u) const {
  if (u.tail()) return *u.tail();
  const auto& c = ctx();
  const int last = c.side - 1;
  std::optional<double> ring;
  bool constant = true;
  auto visit = [&](std::size_t idx) {
    if (!ring) ring = u[idx];
    else if (u[idx] != *ring) constant = false;
  };
  if (c.n == 1) {
    visit(0);
    visit(static_cast<std::size_t>(last));
  } else {
    for (int k = 0; k <= last; ++k) {
      visit(c.index(k, 0));
      visit(c.index(k, last));
      visit(c.index(0, k));
      visit(c.index(last, k));
    }
  }
  if (!constant)
    throw PreconditionError("field has no exterior tail and is not constant on the outer ring of the box");
  return ExteriorTail::constant(c.n, *ring);
}

double FracOperator::row_sum(std::size_t i, const GridFunction& u, const ExteriorTail& tail) const {
  const auto& c = ctx();
  const std::size_t N = c.size();
  const double ui = u[i];
  detail::Accumulator acc(opt_.compensated);
  if (c.n == 1) {
    for (std::size_t j = 0; j < N; ++j)
      if (j != i) acc.add(weights_->at(static_cast<int>(i) - static_cast<int>(j)) * (ui - u[j]));
  } else {
    const auto a = c.multi_index(i);
    for (std::size_t j = 0; j < N; ++j) {
      if (j == i) continue;
      const auto b = c.multi_index(j);
      acc.add(weights_->at(a[0] - b[0], a[1] - b[1]) * (ui - u[j]));
    }
  }
  const auto T = tail_row(i, tail);
  for (std::size_t k = 0; k < T.size(); ++k) acc.add(T[k] * (ui - tail.values[k]));
  return c.c_ns * acc.value();
}

double FracOperator::apply_pointwise(const GridFunction& u, std::size_t node) const {
  if (!same_discretization(u.domain(), *dom_)) throw ConfigError("operator", "field lives on another grid");
  if (node >= ctx().size() || !dom_->in_omega(node))
    throw PreconditionError("apply_pointwise: node is not an interior node");
  return row_sum(node, u, effective_tail(u));
}

InteriorField FracOperator::apply_all(const GridFunction& u) const {
  if (!same_discretization(u.domain(), *dom_)) throw ConfigError("operator", "field lives on another grid");
  const ExteriorTail tail = effective_tail(u);
  prepare_tails(tail, dom_->interior);
  InteriorField out{dom_, std::vector<double>(dom_->interior.size(), 0.0)};
  parallel_for(dom_->interior.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) out.values[k] = row_sum(dom_->interior[k], u, tail);
  });
  return out;
}

double FracOperator::pairing(const GridFunction& u, const GridFunction& phi) const {
  if (!same_discretization(u.domain(), *dom_) || !same_discretization(phi.domain(), *dom_))
    throw ConfigError("operator", "field lives on another grid");
  for (std::size_t j : dom_->exterior)
    if (phi[j] != 0.0) throw PreconditionError("pairing: test function is nonzero outside omega");
  if (phi.tail() && !std::all_of(phi.tail()->values.begin(), phi.tail()->values.end(), [](double v) { return v == 0.0; }))
    throw PreconditionError("pairing: test function has a nonzero tail");
  const ExteriorTail tail = effective_tail(u);
  prepare_tails(tail, dom_->interior);
  const auto& c = ctx();
  const std::size_t N = c.size();
  const auto& interior = dom_->interior;
  std::vector<double> partial(interior.size(), 0.0);
  parallel_for(interior.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const std::size_t i = interior[k];
      detail::Accumulator acc(opt_.compensated);
      for (std::size_t j = 0; j < N; ++j) {
        if (j == i) continue;
        // ordered Ω×Ω pairs carry weight 1, Ω×Ωᶜ pairs weight 2
        const double mult = dom_->in_omega(j) ? 1.0 : 2.0;
        acc.add(mult * weights_->between(c, i, j) * (u[i] - u[j]) * (phi[i] - phi[j]));
      }
      const auto T = tail_row(i, tail);
      for (std::size_t q = 0; q < T.size(); ++q) acc.add(2.0 * T[q] * (u[i] - tail.values[q]) * phi[i]);
      partial[k] = acc.value();
    }
  });
  detail::Accumulator total(opt_.compensated);
  for (double p : partial) total.add(p);
  return 0.5 * c.c_ns * c.cell_volume() * total.value();
}

double FracOperator::sobolev_energy(const GridFunction& u, const Region& region) const {
  if (!same_discretization(u.domain(), *dom_)) throw ConfigError("operator", "field lives on another grid");
  const ExteriorTail tail = effective_tail(u);
  if (region.kind == Region::Kind::whole && !tail.is_constant())
    throw PreconditionError("energy over the whole space needs a constant tail");
  const auto mask = region_mask(*dom_, region);
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) nodes.push_back(i);
  prepare_tails(tail, nodes);
  const auto& c = ctx();
  const std::size_t N = c.size();
  std::vector<double> partial(nodes.size(), 0.0);
  parallel_for(nodes.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const std::size_t i = nodes[k];
      detail::Accumulator acc(opt_.compensated);
      for (std::size_t j = 0; j < N; ++j) {
        if (j == i) continue;
        const double d = u[i] - u[j];
        if (d == 0.0) continue;
        acc.add((mask[j] ? 1.0 : 2.0) * weights_->between(c, i, j) * d * d);
      }
      const auto T = tail_row(i, tail);
      for (std::size_t q = 0; q < T.size(); ++q) {
        const double d = u[i] - tail.values[q];
        acc.add(2.0 * T[q] * d * d);
      }
      partial[k] = acc.value();
    }
  });
  detail::Accumulator total(opt_.compensated);
  for (double p : partial) total.add(p);
  return 0.25 * c.c_ns * c.cell_volume() * total.value();
}

InteriorSystem FracOperator::interior_system(const GridFunction& g) const {
  if (!same_discretization(g.domain(), *dom_)) throw ConfigError("operator", "field lives on another grid");
  const ExteriorTail tail = effective_tail(g);
  prepare_tails(tail, dom_->interior);
  const auto& c = ctx();
  const std::size_t N = c.size();
  const auto& interior = dom_->interior;
  const auto M = static_cast<Eigen::Index>(interior.size());
  InteriorSystem sys{Eigen::MatrixXd::Zero(M, M), Eigen::VectorXd::Zero(M)};
  parallel_for(interior.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const std::size_t i = interior[k];
      const auto r = static_cast<Eigen::Index>(k);
      double diag = 0.0, load = 0.0;
      for (std::size_t j = 0; j < N; ++j) {
        if (j == i) continue;
        const double w = weights_->between(c, i, j);
        diag += w;
        const auto slot = dom_->interior_slot[j];
        if (slot >= 0)
          sys.matrix(r, static_cast<Eigen::Index>(slot)) = -c.c_ns * w;
        else
          load += w * g[j];
      }
      const auto T = tail_row(i, tail);
      for (std::size_t q = 0; q < T.size(); ++q) {
        diag += T[q];
        load += T[q] * tail.values[q];
      }
      sys.matrix(r, r) = c.c_ns * diag;
      sys.load(r) = c.c_ns * load;
    }
  });
  return sys;
}

void FracOperator::dump_stencil(std::ostream& os, std::size_t node) const {
  const auto& c = ctx();
  if (node >= c.size()) throw ConfigError("node", "stencil node out of range");
  os << "kind,x,y,weight\n" << std::setprecision(12);
  for (std::size_t j = 0; j < c.size(); ++j) {
    if (j == node) continue;
    const Point p = c.coord(j);
    os << "node," << p[0] << ',' << p[1] << ',' << c.c_ns * weight(node, j) << '\n';
  }
  const ExteriorTail layout = ExteriorTail::constant(c.n, 0.0);
  const auto T = tail_row(node, layout);
  for (std::size_t q = 0; q < T.size(); ++q) os << "tail," << q << ",0," << c.c_ns * T[q] << '\n';
}

}  // namespace fracac
