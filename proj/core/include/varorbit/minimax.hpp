#pragma once

#include "varorbit/critvals.hpp"
#include "varorbit/gradientflow.hpp"
#include "varorbit/shrink.hpp"
#include "varorbit/verify.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace varorbit {

class MinimaxError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FamilyKind { MountainPass, Sweepout, ClassMin };
std::string to_string(FamilyKind f);

/// Newton polish of an approximate critical point of the discrete action.
struct RefineResult {
  Loop loop;
  double action = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  /// Negative and (numerically) zero eigenvalues of the Hessian relative to
  /// the loop-space metric at the last iterate.
  int morse_index = 0;
  int nullity = 0;
  bool converged = false;
};

/// Newton iteration on dS_k = 0 with a finite-difference Hessian and a
/// pseudo-inverse that skips the (near) null directions of symmetries.
RefineResult refine_critical_point(const Lagrangian& L, double k, const Loop& loop, double gradient_tol = 1e-10,
                                   int max_iterations = 30);

struct MountainPassProblem {
  Lagrangian L;
  double k = 0.0;
  /// p(0) must be a constant loop and S_k(p(last)) < 0.
  PathOfLoops family;
  std::optional<ShrinkMap> confinement;
  /// Only tau and the step controls are used; cut-offs follow the level.
  FlowConfig flow;
  double gradient_tol = 1e-8;
  double level_tol = 1e-3;

  /// Throws MinimaxError unless the endpoint and confinement contracts hold.
  void validate() const;
};

struct MinimaxOptions {
  int max_sweeps = 150;
  /// Flow time per deformation sweep.
  double sweep_time = 0.5;
  /// The string phase stops once the top node's gradient norm is below this.
  double string_tol = 2e-2;
  int climb_steps = 200;
  double climb_step = 0.2;
  int refine_n = 256;
  int newton_iterations = 30;
  /// Period box [D1, D2] for the Palais-Smale classification.
  double period_min = 1e-3;
  double period_max = std::numeric_limits<double>::infinity();
  CertificateTolerances certificate;
  bool certify = true;
};

struct DriftReport {
  /// Coordinate that left the drift box, and the side (-1 below, +1 above).
  int coordinate = -1;
  int side = 0;
  /// Mean and extreme value of that coordinate over the samples, per chunk.
  std::vector<double> mean, extreme;
  bool monotone = false;
  std::string note;
};

struct MinimaxResult {
  FamilyKind family_kind = FamilyKind::MountainPass;
  double k = 0.0;
  /// Critical value after refinement (or the last string level).
  double level = 0.0;
  /// Max action over the deformed family before refinement.
  double string_level = 0.0;
  Loop argmax;
  PSRecord ps;
  PSClassification classification;
  std::optional<OrbitCertificate> certificate;
  bool converged = false;
  int sweeps = 0;
  int morse_index = -1;
  int nullity = -1;
  int pushbacks = 0;
  int pushback_violations = 0;
  PathOfLoops path;
  /// Sweepouts: min over sweeps of the longest loop of the family, the
  /// longest loop at the initial top node, and the period lower bound.
  double family_length = 0.0;
  double initial_minimax_length = 0.0;
  double period_bound = 0.0;
  double level_bound = 0.0;
  std::optional<DriftReport> drift;
  std::vector<std::string> log;
};

MinimaxResult mountain_pass(const MountainPassProblem& p, const MinimaxOptions& opt = {});

/// Straight family from `from` to `to` (linear in samples and period,
/// re-projected when embedded), `nodes` loops including both ends.
PathOfLoops straight_family(const Manifold& m, const Loop& from, const Loop& to, int nodes);

/// Mountain-pass family for a negative-action loop: the constant loop at its
/// chart centroid with period T0, contracted linearly onto the loop.
PathOfLoops contraction_family(const Manifold& m, const Loop& negative, double T0, int nodes);

struct StruweRow {
  double k = 0.0;
  double level = 0.0;
  /// Forward difference quotient (backward at the last point).
  double quotient = 0.0;
  bool refined = false;
  bool converged = false;
  bool pass = false;
  double period = 0.0;
  MinimaxResult result;
};

struct StruweScan {
  std::vector<StruweRow> rows;
  double D = 0.0;
  double D2 = 0.0;
  double tau = 1.0;
  bool monotone = true;
  /// Largest c(k_i) − c(k_{i+1}).
  double max_drop = 0.0;
};

/// Mountain-pass levels on a uniform energy grid. Points whose quotient is
/// below D = 2·median are re-classified with the period box D2 = D + 2.
StruweScan struwe_scan(const std::function<MountainPassProblem(double)>& make_problem, double k_min, double k_max,
                       int grid_size, const MinimaxOptions& opt = {}, int jobs = 1);

struct BarrierEstimate {
  double A1 = 0.0, e0 = 0.0;
  /// Isoperimetric constant used (max over the cover) and the extremes.
  double mu = 0.0, mu_min = 0.0, mu_max = 0.0;
  double lebesgue_delta = 0.0;
  double d = 0.0, r = 0.0, a = 0.0;
  int balls = 0;
};

/// Box cover of K by chart balls of radius `radius` centred on a grid of
/// spacing at most `spacing`.
struct BallCover {
  double spacing = 1.0;
  double radius = 1.5;
};

BarrierEstimate barrier_from_constants(double A1, double e0, double mu, double delta, double k);
BarrierEstimate barrier(const Lagrangian& L, double k, const Box& K, const BallCover& cover, int mu_checks = 200);

/// Latitude sweep of the round sphere about `axis`: constant loops at the
/// poles, circles of colatitude π s in between at their optimal period.
/// `wobble` tilts the circles by wobble·sin(π s) about a perpendicular axis.
PathOfLoops latitude_sweepout(const Lagrangian& L, double k, int nodes, int n, double pole_period = 0.5,
                              const Vec& axis = {}, double wobble = 0.0);

MinimaxResult sweepout_minimax(const Lagrangian& L, double k, const PathOfLoops& sweep, double cu_estimate = 0.0,
                               const MinimaxOptions& opt = {});

struct ClassMinOptions {
  int starts = 4;
  double chunk_time = 2.0;
  int chunks = 60;
  /// Leaving this box is reported as drift.
  std::optional<Box> drift_box;
  double perturbation = 0.05;
  int refine_n = 256;
  double gradient_tol = 1e-9;
  double cu_estimate = 0.0;
  std::uint64_t seed = 11;
  int jobs = 1;
  CertificateTolerances certificate;
};

MinimaxResult class_minimize(const Lagrangian& L, double k, const Eigen::VectorXi& alpha, const Loop& seed,
                             const ClassMinOptions& opt = {});

}  // namespace varorbit
