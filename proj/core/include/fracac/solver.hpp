#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fracac/domain.hpp"
#include "fracac/fraclap.hpp"
#include "fracac/potential.hpp"

namespace fracac {

enum class StepRule { fixed, bb_armijo };
enum class InitKind { exterior_extension, sign_of_g, tanh_profile, custom };

struct SolveConfig {
  double eps = 0.1;
  int max_iter = 50000;
  double grad_tol = 1e-7;  // sup norm of the gradient on Ω
  StepRule step_rule = StepRule::bb_armijo;
  InitKind init = InitKind::tanh_profile;
  std::optional<GridFunction> custom_init;  // read on Ω when init == custom
  double init_noise = 0.0;                  // uniform amplitude added to the start
  std::uint64_t seed = 0;
  bool debug_gradient_checks = false;  // directional-derivative check every 50 iterates

  void validate() const;
};

struct SolveReport {
  GridFunction u;
  int iterations = 0;
  bool converged = false;
  double final_energy = 0.0;
  std::vector<double> energy_trace;  // F after every accepted step, starting with F(u0)
  double grad_norm = 0.0;
  double stationarity_residual = 0.0;  // recomputed with apply_all, independent of the iteration
  bool max_principle_ok = true;
  double max_principle_bound = 0.0;
  double sup_u = 0.0;
  double eps = 0.0;
  double s = 0.0;
};

// F_ε(u, Ω) = E(u, Ω) + ε^{-2s} Σ_Ω W(u) h^n - Σ_Ω f u h^n
double total_energy(const GridFunction& u, const Potential& pot, const GridFunction& f, double eps,
                    const FracOperator& op);

// (-Δ)^s u + ε^{-2s} W'(u) - f on Ω, zero on exterior nodes.
GridFunction gradient(const GridFunction& u, const Potential& pot, const GridFunction& f, double eps,
                      const FracOperator& op);

struct GradientCheck {
  double analytic = 0.0;           // Σ gradient·φ hⁿ
  double finite_difference = 0.0;  // (F(u+tφ) - F(u-tφ)) / 2t
  double rel_error = 0.0;
};

// φ must vanish off Ω.
GradientCheck check_gradient(const GridFunction& u, const Potential& pot, const GridFunction& f, double eps,
                             const FracOperator& op, const GridFunction& phi, double t = 1e-5);

// Smooth random field vanishing outside Ω: a random trigonometric sum times
// the squared distance to ∂Ω.
GridFunction random_test_function(DomainPtr dom, std::uint64_t seed, int modes = 4);

// Starting field for `cfg.init`; exterior and tail are those of g.
GridFunction initial_guess(const GridFunction& g, const Potential& pot, const SolveConfig& cfg, const FracOperator& op);

// Minimizes F_ε over fields equal to g off Ω by projected gradient descent
// with Barzilai-Borwein steps and Armijo backtracking.
SolveReport solve(const GridFunction& g, const Potential& pot, const GridFunction& f, const SolveConfig& cfg,
                  const FracOperator& op);

struct StabilityReport {
  int trials = 0;
  double min_rayleigh = 0.0;     // over random test functions
  double min_eigenvalue = 0.0;   // of the dense second variation
  bool stable = false;           // both >= -1e-8
};

// Second variation ⟨(-Δ)^s φ, φ⟩ + ε^{-2s} Σ W''(u) φ² h^n, normalized by
// ‖φ‖². u must be stationary to `stationarity_tol`.
StabilityReport stability_check(const GridFunction& u, const Potential& pot, const GridFunction& f, double eps,
                                const FracOperator& op, int trials, std::uint64_t seed = 0,
                                double stationarity_tol = 1e-5);

}  // namespace fracac
