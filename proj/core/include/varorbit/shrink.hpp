#pragma once

#include "varorbit/loopspace.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace varorbit {

class ShrinkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Radial profile f with f = id on [0, r0], 0 < f' <= 1, f' < 1 beyond r1 and
/// f unbounded. `df`, `ddf` are its first two derivatives.
struct RadialProfile {
  std::function<double(double)> f, df, ddf;
};

/// C² profile f' = 1 − (1 − s∞)·h((r − r0)/(r1 − r0)) with h the quintic step.
RadialProfile smooth_radial_profile(double r0, double r1, double s_inf);

/// Retraction φ of K = {|x_R| <= r2} onto K0 = {|x_R| <= f(r2)} acting on the
/// Euclidean factor x_R (the chart coordinates listed in `radial`) as
/// x_R ↦ f(|x_R|)·x_R/|x_R|, and as the identity on all other coordinates.
struct ShrinkMap {
  RadialProfile profile;
  std::vector<int> radial;
  double r0 = 0.0, r1 = 0.0, r2 = 0.0;
  /// Collar width r2 − f(r2).
  double epsilon = 0.0;
  /// φ|K0 is homotopic to the inclusion (straight-line homotopy of profiles).
  bool homotopic = true;

  double radius(const Vec& x) const;
  double K_radius() const { return r2; }
  double K0_radius() const { return r2 - epsilon; }
  bool in_K(const Vec& x, double slack = 1e-12) const { return radius(x) <= r2 * (1 + slack); }
  bool in_K0(const Vec& x, double slack = 1e-12) const { return radius(x) <= K0_radius() * (1 + slack); }

  Vec apply(const Vec& x) const;
  Mat jacobian(const Vec& x) const;
};

/// Radial shrink map on the non-periodic chart coordinates of m.
ShrinkMap build_radial_shrink(const Manifold& m, double r0, double r1, double r2, double s_inf = 0.5);
/// Shrink map from a user profile; the profile conditions are checked on a
/// grid of [0, 2·r2] and failures throw.
ShrinkMap build_profile_shrink(const Manifold& m, RadialProfile profile, double r0, double r1, double r2);

struct ShrinkReport {
  /// max over samples of L(φ(x), dφ_x v) − L(x, v); <= 0 means verified.
  double max_violation = -std::numeric_limits<double>::infinity();
  Vec worst_x, worst_v;
  int samples = 0;
  bool verified() const { return max_violation <= 0.0; }
};

struct ShrinkSample {
  Vec x, v;
};

/// Evaluates the shrink inequality on explicit samples (all must lie in K).
ShrinkReport verify_shrink_inequality(const ShrinkMap& s, const Lagrangian& L, const std::vector<ShrinkSample>& samples);
/// Evaluates it on `count` random samples of TK with |v|_x <= vmax; the
/// non-radial chart coordinates are drawn from `others` (or one period).
ShrinkReport verify_shrink_inequality(const ShrinkMap& s, const Lagrangian& L, int count, double vmax,
                                      std::uint64_t seed, const std::optional<Box>& others = std::nullopt);

/// Samplewise φ with period and winding unchanged. Throws ShrinkError when a
/// sample is outside K.
Loop pushback(const ShrinkMap& s, const Loop& loop);

}  // namespace varorbit
