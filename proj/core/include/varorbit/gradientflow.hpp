#pragma once

#include "varorbit/loopspace.hpp"

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace varorbit {

enum class FlowKind { Rescaled, Truncated };

enum class PSVerdict { Converged, PeriodCollapse, PeriodBlowup, Escaped, Budget };

std::string to_string(PSVerdict v);

/// Integration settings for the negative gradient flows of the action.
struct FlowConfig {
  FlowKind kind = FlowKind::Rescaled;
  /// Ceiling of the cut-off ρ (truncated flow only).
  double tau = 1.0;
  /// ρ vanishes for S <= cutoff_low and equals tau for S >= cutoff_high.
  double cutoff_low = 0.0;
  double cutoff_high = 0.0;
  /// Initial and maximal time step.
  double step = 0.25;
  double max_step = 2.0;
  double min_step = 1e-14;
  /// Integration stops early once the Riesz gradient norm drops below this.
  double gradient_tol = 0.0;
  int max_steps = 1000000;
  /// Integration stops with `period_collapse` once T falls below this.
  double min_period = 1e-9;
  /// Reports `escaped` the first time a sample leaves this chart box.
  std::optional<Box> confinement;

  /// Truncated flow with cut-offs at level/4 and level/2.
  static FlowConfig truncated_at(double level, double tau = 1.0);
  void validate() const;
};

struct PSStep {
  double time = 0.0;
  double action = 0.0;
  double grad_norm = 0.0;
  double period = 0.0;
  double excursion = 0.0;
};

/// Trajectory diagnostics of one flow run.
struct PSRecord {
  std::vector<PSStep> steps;
  PSVerdict verdict = PSVerdict::Budget;
  /// Time integral of ρ‖∇S‖²/√(1+‖∇S‖²) along the run, by the same RK4
  /// weights as the trajectory.
  double dissipated = 0.0;
  /// Index of the first sample that left the confinement box, or -1.
  int escaped_sample = -1;

  const PSStep& last() const { return steps.back(); }
};

/// Integration stalled: the action could not be decreased with a step above
/// the configured minimum.
class FlowStall : public std::runtime_error {
 public:
  FlowStall(const std::string& what, PSRecord record) : std::runtime_error(what), record_(std::move(record)) {}
  const PSRecord& record() const { return record_; }

 private:
  PSRecord record_;
};

/// Cut-off ρ(S) of the truncated flow (τ·smoothstep between the cut-offs).
double cutoff(const FlowConfig& cfg, double action);

/// Flow field at the loop: −∇S/√(1+‖∇S‖²), times ρ(S) for the truncated flow.
LoopTangent field(const FlowConfig& cfg, const Lagrangian& L, double k, const Loop& loop);

struct FlowResult {
  Loop loop;
  PSRecord record;
};

/// Integrates the flow for the given duration with a 4th-order explicit scheme
/// in (x, log T), halving the step whenever the action fails to decrease.
/// Throws FlowStall on step underflow.
FlowResult evolve(const FlowConfig& cfg, const Lagrangian& L, double k, const Loop& loop, double duration);

struct PSClassification {
  PSVerdict verdict = PSVerdict::Budget;
  /// False for a period collapse at a level away from zero, which the theory
  /// rules out; it then signals a discretization problem.
  bool consistent = true;
  std::string note;
};

PSClassification ps_classify(const PSRecord& rec, double D1, double D2, double gradient_tol,
                             double level_tol = 1e-3);

}  // namespace varorbit
