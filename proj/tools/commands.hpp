#pragma once

#include "varorbit/scenario.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace varorbit::cli {

/// Exit codes shared by all commands.
enum Exit : int { kOk = 0, kFailed = 1, kInvalid = 2 };

struct FindOrbitArgs {
  std::optional<double> k;
  std::string method = "mountain-pass";
  /// Comma-separated winding numbers over the periodic coordinates.
  std::string klass;
  std::optional<std::uint64_t> seed;
  double cu = 0.0;
  int jobs = 1;
  std::filesystem::path out;
};

struct ScanArgs {
  double k_min = 0.0, k_max = 0.0;
  int steps = 9;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::filesystem::path out;
};

struct CuArgs {
  std::optional<double> k_min, k_max, tol;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out;
};

struct BarrierArgs {
  std::optional<double> k;
  std::filesystem::path out;
};

/// Each command loads the scenario, writes its artifacts under `out` (the
/// scenario's output directory when empty) and returns an exit code. Messages
/// go to `log`, diagnostics to `err`.
int find_orbit(const std::filesystem::path& scenario, const FindOrbitArgs& a, std::ostream& log, std::ostream& err);
int scan(const std::filesystem::path& scenario, const ScanArgs& a, std::ostream& log, std::ostream& err);
int estimate_cu(const std::filesystem::path& scenario, const CuArgs& a, std::ostream& log, std::ostream& err);
int barrier(const std::filesystem::path& scenario, const BarrierArgs& a, std::ostream& log, std::ostream& err);
/// Re-certifies the stored loop under the embedded scenario and compares every
/// recorded field. 0 when they agree and the certificate passes.
int verify(const std::filesystem::path& certificate, std::ostream& log, std::ostream& err);

/// Mountain-pass problem of find-orbit and scan: a negative-action loop from the
/// [search] box, contracted onto a constant loop, confined by [shrink]. Throws
/// std::runtime_error when no negative loop is found.
MountainPassProblem mountain_pass_problem(const Scenario& s, double k, std::uint64_t seed);

/// Winding vector from "1" or "1,0" over the periodic coordinates of m.
Eigen::VectorXi parse_class(const Manifold& m, const std::string& text);

}  // namespace varorbit::cli
