#pragma once

#include "varorbit/lagrangian.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <stdexcept>
#include <vector>

namespace varorbit {

class LoopError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point (x, T) of the free-period loop space: N uniform samples of a closed
/// curve x: R/Z -> M and its period T > 0. For periodic charts, samples are
/// stored lifted (unwrapped) and the closing segment runs from the last sample
/// to `first + winding ∘ periods`, so the free homotopy class is exact.
struct Loop {
  Eigen::MatrixXd samples;  // coord_dim x N
  double period = 1.0;
  Eigen::VectorXi winding;  // one entry per chart coordinate, empty when embedded

  int size() const { return static_cast<int>(samples.cols()); }
  int coord_dim() const { return static_cast<int>(samples.rows()); }
  Vec point(int i) const { return samples.col(i); }
};

/// Tangent vector (ξ, α) at a loop: one vector per sample plus a period variation.
struct LoopTangent {
  Eigen::MatrixXd xi;
  double alpha = 0.0;

  LoopTangent& operator+=(const LoopTangent& o) {
    xi += o.xi;
    alpha += o.alpha;
    return *this;
  }
  LoopTangent operator*(double s) const { return {xi * s, alpha * s}; }
  LoopTangent operator+(const LoopTangent& o) const { return {xi + o.xi, alpha + o.alpha}; }
  LoopTangent operator-(const LoopTangent& o) const { return {xi - o.xi, alpha - o.alpha}; }
  static LoopTangent zero(int rows, int n) { return {Eigen::MatrixXd::Zero(rows, n), 0.0}; }
};

/// Covector on the loop space: ∂S/∂x_i per sample and ∂S/∂T.
struct LoopCovector {
  Eigen::MatrixXd position;
  double period = 0.0;

  double apply(const LoopTangent& t) const { return (position.array() * t.xi.array()).sum() + period * t.alpha; }
};

/// Ordered family of loops sharing N and winding.
struct PathOfLoops {
  std::vector<Loop> nodes;
  double mesh_bound = 0.0;
};

struct ActionDifferential {
  double action = 0.0;
  LoopCovector dS;
};

/// Throws LoopError unless the loop is valid on the manifold.
void validate_loop(const Manifold& m, const Loop& loop);

/// Lift offset winding ∘ periods of the closing segment.
Vec lift_offset(const Manifold& m, const Loop& loop);
/// Chart difference x_{i+1} − x_i (with the lift offset on the closing segment).
Vec segment(const Manifold& m, const Loop& loop, int i);

/// Discrete free-period action: midpoint rule for ∫ T L(x, ẋ/T) dt plus kT.
double action(const Lagrangian& L, double k, const Loop& loop);

/// Exact gradient of the discrete action with respect to the samples and T.
ActionDifferential differential(const Lagrangian& L, double k, const Loop& loop);

/// Sparse representation of the product metric on T_(x,T) of the discrete loop
/// space: base-point term plus covariant-difference H¹ term, plus the period
/// factor. For embedded manifolds, unknowns are coefficients in orthonormal
/// tangent bases at the samples.
class RieszSolver {
 public:
  explicit RieszSolver(ManifoldPtr manifold);

  /// Assembles and factorizes the metric at the loop.
  void factorize(const Loop& loop);
  /// Riesz representative of dS at the factorized loop.
  LoopTangent solve(const LoopCovector& dS) const;
  /// Product-metric inner product at the factorized loop.
  double inner(const LoopTangent& a, const LoopTangent& b) const;
  double norm(const LoopTangent& a) const;

  /// Assembled metric in reduced coordinates (excluding the period entry).
  const Eigen::SparseMatrix<double>& matrix() const { return metric_; }
  /// Reduced coordinates of a tangent (identity for charts).
  Eigen::VectorXd reduce(const LoopTangent& t) const;
  Eigen::VectorXd reduce_covector(const LoopCovector& c) const;
  LoopTangent expand(const Eigen::VectorXd& coords, double alpha) const;
  int reduced_size() const { return static_cast<int>(metric_.rows()); }
  /// Tangent basis at sample i (embedded only).
  const Mat& basis(int i) const { return bases_[static_cast<std::size_t>(i)]; }

 private:
  ManifoldPtr manifold_;
  Eigen::SparseMatrix<double> metric_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  std::vector<Mat> bases_;
  int block_ = 0;
  int n_ = 0;
  bool analyzed_ = false;
};

/// Convenience: Riesz gradient of dS at the loop.
LoopTangent riesz_gradient(const Lagrangian& L, const Loop& loop, const LoopCovector& dS);

/// Moves the loop along a tangent: samples x + h ξ (re-projected when
/// embedded), period T·exp(h α / T) so that T stays positive.
Loop advance(const Manifold& m, const Loop& loop, const LoopTangent& t, double h);

/// Metric length of the loop (midpoint rule on each segment).
double length(const Manifold& m, const Loop& loop);
/// Max over consecutive pairs of the product-metric norm of the difference
/// quotient, with the path parameterized over [0, 1].
double path_speed(const Manifold& m, const PathOfLoops& path);
/// Max over t of chart_distance(a(t), b(t)).
double loop_set_distance(const Manifold& m, const Loop& a, const Loop& b);
/// Winding vector of a chart loop.
Eigen::VectorXi homotopy_class(const Manifold& m, const Loop& loop);

/// Product-metric norm of (b − a) measured at a (shared winding required).
double loop_difference_norm(const Manifold& m, const Loop& a, const Loop& b);

Loop constant_loop(const Vec& x, double period, int n);
/// Loop with samples f(i / n), i = 0..n−1; f must be lifted consistently with
/// the winding.
Loop sample_loop(const std::function<Vec(double)>& f, double period, int n, Eigen::VectorXi winding = {});
/// Round circle of the given radius in the coordinate plane (a, b) of a chart,
/// counterclockwise for orientation +1.
Loop circle_loop(const Vec& center, double radius, int a, int b, int orientation, double period, int n);
/// Resamples a loop to n points by trigonometric interpolation of the
/// periodic part (re-projected when embedded).
Loop resample(const Manifold& m, const Loop& loop, int n);
/// Cyclic shift of the sample index.
Loop rotate_samples(const Manifold& m, const Loop& loop, int shift);

}  // namespace varorbit
