#pragma once

#include "varorbit/io.hpp"
#include "varorbit/minimax.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace varorbit {

/// Parse or validation failure, with "line:col: " prefixed when known.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// TOML subset: comments, [table] and [a.b] headers, bare/quoted/dotted keys,
/// basic and literal strings, integers, floats (inf, nan), booleans and
/// arrays (nested, multi-line, trailing comma). No inline tables, no arrays of
/// tables, no dates.
Json parse_toml(const std::string& text);
std::string dump_toml(const Json& doc);

/// Typed view of a scenario document.
///
///   name, seed, k                  top-level scalars
///   [parameters]                   named constants usable in expressions
///   [manifold]                     kind = "chart": coordinates, periods, metric
///                                  (matrix of expressions, identity if absent);
///                                  kind = "cylinder": beta (dr² + β(r) dθ²);
///                                  kind = "sphere": radius (coordinates x, y, z)
///   [lagrangian]                   theta (one expression per coordinate), V,
///                                  cap_energy with cap_region
///   [shrink]                       r0, r1, r2 and s_inf or profile (expression in r)
///   [search]                       lo, hi, k_min, k_max, tol
///   [barrier]                      lo, hi, spacing, radius
///   [discretization]               n, refine_n, nodes, gradient_tol, level_tol,
///                                  tau, max_sweeps, sweep_time, pole_period
///   [class_min]                    seed (expressions in t ∈ [0, 1], winding added),
///                                  period, lo, hi, starts, chunks, chunk_time
///   [sweepout]                     axis, wobble
///   [certificate]                  el_residual, energy_dev, closure, shooting_steps
///   [output]                       dir
struct Scenario {
  std::string name;
  std::uint64_t seed = 1;
  std::optional<double> k;
  Json doc;
  /// pi, k and [parameters], as substituted into expressions.
  std::map<std::string, double> resolved_parameters;

  ManifoldPtr manifold;
  std::optional<Lagrangian> lagrangian;
  std::optional<ShrinkMap> shrink;

  int n = 64, refine_n = 256, nodes = 17, max_sweeps = 150;
  std::optional<double> gradient_tol;
  double level_tol = 1e-3, tau = 1.0, sweep_time = 0.5, pole_period = 0.5;

  std::optional<Box> search_region;
  double k_min = 0.0, k_max = 10.0, cu_tol = 1e-2;

  std::optional<Box> barrier_box;
  BallCover cover;

  std::vector<std::string> class_seed;
  double class_period = 1.0;
  std::optional<Box> drift_box;
  int class_starts = 4, class_chunks = 60;
  double class_chunk_time = 2.0;

  Vec sweep_axis;
  double sweep_wobble = 0.0;

  CertificateTolerances tolerances;
  std::string output_dir = "out";

  const Lagrangian& L() const { return *lagrangian; }
  MinimaxOptions minimax_options() const;
  /// Seed loop of the class-minimization table with the given winding.
  Loop class_seed_loop(const Eigen::VectorXi& winding) const;
};

/// Parses and validates: every expression must compile and every table entry
/// must have the right shape.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);
std::string dump_scenario(const Scenario& s);

}  // namespace varorbit
