#pragma once

#include "varorbit/geometry.hpp"

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace varorbit {

class LagrangianError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Smooth function on the manifold with its coordinate gradient. An empty
/// field is identically zero.
struct ScalarField {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;

  bool is_zero() const { return !value; }
};

/// 1-form θ with coordinate components θ_j(x) and Jacobian J(i, j) = ∂_i θ_j.
struct OneForm {
  std::function<Vec(const Vec&)> value;
  std::function<Mat(const Vec&)> jacobian;

  bool is_zero() const { return !value; }
};

/// Velocity-space cut-off above which the Lagrangian is purely kinetic.
struct QuadraticCap {
  double radius = 0.0;
  double blend = 0.0;
};

/// L, L_v and L_x at one point of TM.
struct LagrangianJet {
  double value = 0.0;
  Vec Lv;
  Vec Lx;
};

/// Electromagnetic Lagrangian L(x, v) = ½|v|²_x + θ_x(v) + V(x), optionally
/// blended into ½|v|²_x above a velocity cap. Immutable; evaluations are pure.
class Lagrangian {
 public:
  explicit Lagrangian(ManifoldPtr manifold, OneForm theta = {}, ScalarField potential = {},
                      std::optional<QuadraticCap> cap = std::nullopt);

  const Manifold& manifold() const { return *manifold_; }
  const ManifoldPtr& manifold_ptr() const { return manifold_; }
  const OneForm& theta() const { return theta_; }
  const ScalarField& potential() const { return potential_; }
  const std::optional<QuadraticCap>& cap() const { return cap_; }
  bool is_pure_kinetic() const { return theta_.is_zero() && potential_.is_zero(); }

  double value(const Vec& x, const Vec& v) const;
  Vec Lv(const Vec& x, const Vec& v) const;
  Vec Lx(const Vec& x, const Vec& v) const;
  Mat Lvv(const Vec& x, const Vec& v) const;
  LagrangianJet jet(const Vec& x, const Vec& v) const;
  /// E_L(x, v) = L_v(x, v)[v] − L(x, v).
  double energy(const Vec& x, const Vec& v) const;

  double V(const Vec& x) const { return potential_.is_zero() ? 0.0 : potential_.value(x); }
  Vec theta_at(const Vec& x) const;
  /// Exterior derivative F(i, j) = ∂_i θ_j − ∂_j θ_i.
  Mat two_form(const Vec& x) const;

  Lagrangian with_cap(QuadraticCap cap) const;

 private:
  ManifoldPtr manifold_;
  OneForm theta_;
  ScalarField potential_;
  std::optional<QuadraticCap> cap_;
};

/// Constants of the quadratic growth bounds, certified on a sample set.
struct GrowthConstants {
  double A1 = 0, A2 = 0, A3 = 0, A4 = 0, A5 = 0;
  /// sup_x |θ_x| over the samples.
  double sup_theta = 0;
  std::vector<double> radii;
  /// a(r) = sup_{|v| <= r} L and b(r) = sup_{|w| = 1, |v| <= r} w·L_vv·w.
  std::vector<double> a_profile, b_profile;
  int samples = 0;
};

/// Sample points of a region: a grid for charts, projected grid points for
/// embedded manifolds.
std::vector<Vec> sample_region(const Manifold& m, const Box& region, int per_axis);

/// sup_x E_L(x, 0) over the region: Halton samples refined by projected ascent.
double e0_estimate(const Lagrangian& L, const Box& region, int samples);

GrowthConstants estimate_growth_constants(const Lagrangian& L, const Box& region, double vmax, int per_axis = 9,
                                          int directions = 16, int speeds = 12);

/// Quadratic-at-infinity modification agreeing with L on {E_L <= k + 1} over
/// the region.
Lagrangian quad_cap(const Lagrangian& L, double k, const Box& region);

/// Cap radius chosen by quad_cap: twice the smallest admissible radius.
double quad_cap_radius(const Lagrangian& L, double k, const Box& region);
/// Blend width chosen by quad_cap: at least radius/4, widened until the blend
/// terms cannot lower the fiberwise Hessian by more than half of g.
double quad_cap_blend(const Lagrangian& L, double radius, const Box& region);

/// C² quintic step, 0 at u <= 0, 1 at u >= 1; value and first two derivatives.
struct Smoothstep {
  double h, dh, ddh;
};
Smoothstep smoothstep5(double u);

/// Point i of the d-dimensional Halton sequence (bases 2, 3, 5, ...), in [0,1)^d.
Vec halton(int index, int dim);

}  // namespace varorbit
