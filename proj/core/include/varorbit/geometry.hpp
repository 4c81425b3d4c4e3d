#pragma once

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace varorbit {

inline constexpr int kMaxDim = 6;

/// Small stack-allocated vectors and matrices for points, velocities and metric
/// tensors (chart or ambient coordinates, dimension <= kMaxDim).
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Representation { PeriodicChart, Embedded };

/// Christoffel symbols of the second kind: `upper[k](i, j)` is Γ^k_{ij}.
struct Christoffel {
  int dim = 0;
  std::array<Mat, kMaxDim> upper;

  /// Matrix C with C(k, j) = Γ^k_{ij} u^i, i.e. the connection applied to the
  /// direction u.
  Mat contract(const Vec& u) const;
};

/// Metric of a periodic chart. `derivatives`, when provided, fills `out[i]`
/// with ∂_i g; otherwise central differences are used.
struct ChartMetric {
  std::function<Mat(const Vec&)> value;
  std::function<void(const Vec&, std::span<Mat>)> derivatives;
  bool constant = false;
};

/// Codimension-one embedded hypersurface {c(z) = 0} of Euclidean space.
struct Embedding {
  int ambient_dim = 3;
  std::function<double(const Vec&)> constraint;
  std::function<Vec(const Vec&)> constraint_gradient;
  std::function<Mat(const Vec&)> constraint_hessian;
  /// Closest-point retraction onto the surface.
  std::function<Vec(const Vec&)> project;
};

/// A complete Riemannian manifold given either by a global chart with some
/// coordinates identified modulo positive periods, or as an embedded
/// hypersurface of Euclidean space with the induced metric.
///
/// Points and tangent vectors use chart coordinates for charts and ambient
/// coordinates for embedded manifolds. Instances are immutable; every query is
/// safe to call concurrently.
class Manifold {
 public:
  static Manifold periodic_chart(std::vector<std::string> coordinates, Vec periods, ChartMetric metric,
                                 double fd_scale = 1.0);
  static Manifold embedded(std::vector<std::string> coordinates, Embedding embedding);

  static Manifold flat(int dim, Vec periods);
  static Manifold sphere(double radius = 1.0);

  Representation representation() const { return rep_; }
  bool is_chart() const { return rep_ == Representation::PeriodicChart; }
  bool is_flat() const { return flat_; }
  /// Intrinsic dimension.
  int dim() const { return dim_; }
  /// Number of coordinates used to represent points (chart or ambient).
  int coord_dim() const { return static_cast<int>(coords_.size()); }
  const std::vector<std::string>& coordinate_names() const { return coords_; }
  /// Period of every coordinate, 0 for non-periodic ones (charts only).
  const Vec& periods() const { return periods_; }
  bool has_periodic_coordinates() const;

  /// Metric tensor at x. For embedded manifolds this is the ambient identity,
  /// which restricted to tangent vectors is the induced metric.
  Mat metric(const Vec& x) const;
  double metric_eval(const Vec& x, const Vec& u, const Vec& w) const;
  double norm(const Vec& x, const Vec& u) const;
  /// ∂_i g for i < coord_dim.
  std::array<Mat, kMaxDim> metric_derivatives(const Vec& x) const;
  Christoffel christoffel(const Vec& x) const;

  /// Reduces periodic coordinates into [0, period).
  Vec wrap(const Vec& x) const;
  /// Shortest lattice representative of y - x.
  Vec shortest_displacement(const Vec& x, const Vec& y) const;
  /// Metric length of the straight chart segment from x to the nearest lattice
  /// copy of y; an upper bound on the Riemannian distance.
  double chart_distance(const Vec& x, const Vec& y) const;

  // Embedded-only queries.
  Vec normal(const Vec& z) const;
  Mat tangent_projection(const Vec& z) const;
  Mat normal_projection(const Vec& z) const;
  /// Orthonormal basis of the tangent space (ambient_dim x dim).
  Mat tangent_basis(const Vec& z) const;
  Vec project(const Vec& z) const;
  const Embedding& embedding() const;

 private:
  Manifold() = default;
  void check_finite(const Mat& g, const Vec& x) const;

  Representation rep_ = Representation::PeriodicChart;
  int dim_ = 0;
  bool flat_ = false;
  double fd_scale_ = 1.0;
  std::vector<std::string> coords_;
  Vec periods_;
  ChartMetric metric_;
  std::shared_ptr<const Embedding> embedding_;
};

using ManifoldPtr = std::shared_ptr<const Manifold>;

/// Axis-aligned box in chart (or ambient) coordinates.
struct Box {
  Vec lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Vec& x, double slack = 0.0) const;
  Vec clamp(const Vec& x) const;
  Vec center() const { return 0.5 * (lo + hi); }
  /// Point of the box at unit-cube coordinates u.
  Vec at(const Vec& u) const { return lo + u.cwiseProduct(hi - lo); }
};

/// Gauss-Legendre nodes/weights on [0, 1].
std::span<const std::pair<double, double>> gauss_legendre_16();

}  // namespace varorbit
