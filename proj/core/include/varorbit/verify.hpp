#pragma once

#include "varorbit/loopspace.hpp"

#include <string>
#include <vector>

namespace varorbit {

enum class OrbitMethod { MountainPass, Sweepout, ClassMin };

std::string to_string(OrbitMethod m);
OrbitMethod orbit_method_from_string(const std::string& s);

/// Velocities ẋ(t_i) by central differences of the given order (4 or 6) in
/// t = sT.
Eigen::MatrixXd sample_velocities(const Manifold& m, const Loop& loop, int order = 4);

/// max_i |d/dt L_v − L_x| at the samples, in the dual metric norm (tangential
/// part for embedded manifolds).
double el_residual(const Lagrangian& L, const Loop& loop);
/// max_i |E_L(x_i, ẋ_i) − k|, velocities by the 6th-order stencil.
double energy_deviation(const Lagrangian& L, const Loop& loop, double k);

struct ShootReport {
  Vec x_end, v_end;
  /// |x(T) − x0| + |v(T) − v0| in the metric at x0 (lattice-reduced for
  /// periodic coordinates).
  double closure = 0.0;
  double energy_drift = 0.0;
  bool diverged = false;
  int steps = 0;
  /// Positions at `record` uniform times in [0, T) when requested.
  Eigen::MatrixXd trajectory;
};

/// Integrates the Euler-Lagrange flow from (x0, v0) over [0, T] with classical
/// RK4 at `steps` uniform steps (rounded up to a multiple of `record`).
ShootReport shoot(const Lagrangian& L, const Vec& x0, const Vec& v0, double T, int steps = 4096, int record = 0);

/// Observed order log2(|e_n − e_2n| / |e_2n − e_4n|) of the end point.
double shooting_order(const Lagrangian& L, const Vec& x0, const Vec& v0, double T, int base_steps = 64);

struct CertificateTolerances {
  double el_residual = 1e-3;
  double energy_dev = 1e-3;
  double closure = 1e-3;
  int shooting_steps = 4096;
};

struct OrbitCertificate {
  Loop loop;
  double k = 0.0;
  double action = 0.0;
  double el_residual = 0.0;
  double energy_dev = 0.0;
  double closure_err = 0.0;
  double energy_drift = 0.0;
  double length = 0.0;
  Eigen::VectorXi homotopy;
  OrbitMethod method = OrbitMethod::MountainPass;
  CertificateTolerances tolerances;
  bool pass = false;
  /// Names of the violated fields.
  std::vector<std::string> failures;
};

/// Assembles all residuals of a candidate orbit. Reads only the loop.
OrbitCertificate certify(const Lagrangian& L, double k, const Loop& loop, OrbitMethod method,
                         const CertificateTolerances& tol = {});

}  // namespace varorbit
