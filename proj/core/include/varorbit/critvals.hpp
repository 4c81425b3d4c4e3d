#pragma once

#include "varorbit/loopspace.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace varorbit {

/// Action of the loop at the best period, and that period.
struct PeriodOptimum {
  double period = 0.0;
  double action = 0.0;
  /// True when S_k(T) is unbounded below as T → ∞.
  bool unbounded = false;
};

/// Minimizes S_k over the period with the samples fixed. For uncapped
/// Lagrangians S_k(T) = K/T + F + (P + k)T exactly; capped ones fall back to a
/// golden-section search in log T.
PeriodOptimum optimize_period(const Lagrangian& L, double k, const Loop& loop);

/// Effort spent per energy when looking for negative-action loops.
struct SearchBudget {
  int n = 64;
  int centers_per_axis = 5;
  int radii = 12;
  int descent_starts = 6;
  double descent_time = 20.0;
  std::uint64_t seed = 1;
};

struct NegativeLoopSearch {
  std::optional<Loop> witness;
  double best_action = 0.0;
  /// "constant", "circle" or "descent".
  std::string source;
  int evaluations = 0;
};

/// Searches the region for a contractible loop with S_k < 0: constant loops
/// where E(x, 0) > k, round circles at their optimal period, then multi-start
/// descent. An empty witness only means the budget was exhausted.
NegativeLoopSearch find_negative_action_loop(const Lagrangian& L, double k, const Box& region,
                                             const SearchBudget& budget = {});

struct CuWitness {
  double k = 0.0;
  Loop loop;
  double action = 0.0;
};

struct CriticalValueEstimate {
  double value = 0.0;
  double lo = 0.0, hi = 0.0;
  bool unbounded_suspected = false;
  /// No witness at the lower end of the bracket either.
  bool below_bracket = false;
  std::vector<CuWitness> witnesses;
  /// Energies at which the search failed.
  std::vector<double> failures;
  std::vector<std::string> log;
  int evaluations = 0;
};

/// Brackets c_u(L) by bisection on k over [k_lo, k_hi] down to width `tol`.
CriticalValueEstimate estimate_cu(const Lagrangian& L, const Box& region, double k_lo, double k_hi, double tol = 1e-2,
                                  const SearchBudget& budget = {});

/// Round ball in chart coordinates.
struct ChartBall {
  Vec center;
  double radius = 0.0;
};

/// The random-loop check found |∫γ*θ| > μ ℓ(γ)².
class IsoperimetricViolation : public std::runtime_error {
 public:
  IsoperimetricViolation(const std::string& what, Loop loop) : std::runtime_error(what), loop_(std::move(loop)) {}
  const Loop& loop() const { return loop_; }

 private:
  Loop loop_;
};

/// μ = ½ sup_ball ‖dθ‖ / λ_min(g), so that |∫γ*θ| <= μ ℓ(γ)² for closed curves
/// in the ball, floored at 1e-12. The constant is checked on `checks` random
/// loops; a failure throws IsoperimetricViolation with the loop.
double estimate_mu(const Manifold& m, const OneForm& theta, const ChartBall& ball, int checks = 1000,
                   std::uint64_t seed = 7);

/// Discrete flux Σ θ(midpoint)·(x_{i+1} − x_i) of the 1-form along the loop.
double flux(const Manifold& m, const OneForm& theta, const Loop& loop);

}  // namespace varorbit
