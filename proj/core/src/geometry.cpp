#include "varorbit/geometry.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace varorbit {

namespace {

std::vector<std::pair<double, double>> make_gauss_legendre(int n) {
  // Newton iteration on P_n, mapped from [-1, 1] to [0, 1].
  std::vector<std::pair<double, double>> rule(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule[static_cast<std::size_t>(i)] = {0.5 * (1.0 - x), 0.5 * w};
  }
  return rule;
}

std::string format_point(const Vec& x) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

}  // namespace

std::span<const std::pair<double, double>> gauss_legendre_16() {
  static const auto rule = make_gauss_legendre(16);
  return rule;
}

Mat Christoffel::contract(const Vec& u) const {
  Mat c = Mat::Zero(dim, dim);
  for (int k = 0; k < dim; ++k)
    for (int j = 0; j < dim; ++j) {
      double s = 0.0;
      for (int i = 0; i < dim; ++i) s += upper[static_cast<std::size_t>(k)](i, j) * u[i];
      c(k, j) = s;
    }
  return c;
}

Manifold Manifold::periodic_chart(std::vector<std::string> coordinates, Vec periods, ChartMetric metric,
                                  double fd_scale) {
  const int n = static_cast<int>(coordinates.size());
  if (n < 1 || n > kMaxDim) throw GeometryError("chart dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  if (periods.size() != n) throw GeometryError("periods must have one entry per coordinate");
  for (int i = 0; i < n; ++i)
    if (!(periods[i] >= 0.0) || !std::isfinite(periods[i]))
      throw GeometryError("periods must be finite and non-negative (0 marks a non-periodic coordinate)");
  if (!metric.value) throw GeometryError("chart metric missing");
  Manifold m;
  m.rep_ = Representation::PeriodicChart;
  m.dim_ = n;
  m.coords_ = std::move(coordinates);
  m.periods_ = std::move(periods);
  m.flat_ = metric.constant && metric.value(Vec::Zero(n)).isIdentity(0.0);
  m.metric_ = std::move(metric);
  m.fd_scale_ = fd_scale;
  return m;
}

Manifold Manifold::embedded(std::vector<std::string> coordinates, Embedding embedding) {
  const int n = static_cast<int>(coordinates.size());
  if (n != embedding.ambient_dim || n < 2 || n > kMaxDim)
    throw GeometryError("embedded manifold: coordinate names must match the ambient dimension");
  if (!embedding.constraint || !embedding.constraint_gradient || !embedding.project)
    throw GeometryError("embedded manifold: constraint, gradient and projection are required");
  Manifold m;
  m.rep_ = Representation::Embedded;
  m.dim_ = n - 1;
  m.coords_ = std::move(coordinates);
  m.periods_ = Vec::Zero(n);
  m.embedding_ = std::make_shared<const Embedding>(std::move(embedding));
  return m;
}

Manifold Manifold::flat(int dim, Vec periods) {
  std::vector<std::string> names;
  for (int i = 0; i < dim; ++i) names.push_back("x" + std::to_string(i + 1));
  ChartMetric metric;
  metric.constant = true;
  metric.value = [dim](const Vec&) { return Mat(Mat::Identity(dim, dim)); };
  metric.derivatives = [dim](const Vec&, std::span<Mat> out) {
    for (int i = 0; i < dim; ++i) out[static_cast<std::size_t>(i)] = Mat::Zero(dim, dim);
  };
  return periodic_chart(std::move(names), std::move(periods), std::move(metric));
}

Manifold Manifold::sphere(double radius) {
  if (!(radius > 0.0)) throw GeometryError("sphere radius must be positive");
  Embedding e;
  e.ambient_dim = 3;
  e.constraint = [radius](const Vec& z) { return z.squaredNorm() - radius * radius; };
  e.constraint_gradient = [](const Vec& z) { return Vec(2.0 * z); };
  e.constraint_hessian = [](const Vec& z) { return Mat(2.0 * Mat::Identity(z.size(), z.size())); };
  e.project = [radius](const Vec& z) {
    const double n = z.norm();
    if (n == 0.0) throw GeometryError("cannot project the origin onto the sphere");
    return Vec(radius * z / n);
  };
  return embedded({"x", "y", "z"}, std::move(e));
}

bool Manifold::has_periodic_coordinates() const { return is_chart() && (periods_.array() > 0.0).any(); }

void Manifold::check_finite(const Mat& g, const Vec& x) const {
  if (!g.allFinite()) throw GeometryError("non-finite metric entries at " + format_point(x));
}

Mat Manifold::metric(const Vec& x) const {
  if (!is_chart()) return Mat::Identity(coord_dim(), coord_dim());
  Mat g = metric_.value(x);
  check_finite(g, x);
  return g;
}

double Manifold::metric_eval(const Vec& x, const Vec& u, const Vec& w) const {
  if (!is_chart() || flat_) return u.dot(w);
  return u.dot(metric(x) * w);
}

double Manifold::norm(const Vec& x, const Vec& u) const { return std::sqrt(std::max(0.0, metric_eval(x, u, u))); }

std::array<Mat, kMaxDim> Manifold::metric_derivatives(const Vec& x) const {
  const int n = coord_dim();
  std::array<Mat, kMaxDim> d;
  if (!is_chart() || metric_.constant) {
    for (int i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = Mat::Zero(n, n);
    return d;
  }
  if (metric_.derivatives) {
    metric_.derivatives(x, std::span<Mat>(d.data(), static_cast<std::size_t>(n)));
    for (int i = 0; i < n; ++i) check_finite(d[static_cast<std::size_t>(i)], x);
    return d;
  }
  const double h = 1e-5 * fd_scale_;
  for (int i = 0; i < n; ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    d[static_cast<std::size_t>(i)] = (metric(xp) - metric(xm)) / (2.0 * h);
  }
  return d;
}

Christoffel Manifold::christoffel(const Vec& x) const {
  if (!is_chart()) throw GeometryError("Christoffel symbols are only provided for chart manifolds");
  const int n = coord_dim();
  Christoffel c;
  c.dim = n;
  if (metric_.constant) {
    for (int k = 0; k < n; ++k) c.upper[static_cast<std::size_t>(k)] = Mat::Zero(n, n);
    return c;
  }
  const Mat g = metric(x);
  Eigen::LDLT<Mat> ldlt(g);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all())
    throw GeometryError("singular metric at " + format_point(x));
  const Mat ginv = ldlt.solve(Mat::Identity(n, n));
  const auto dg = metric_derivatives(x);
  // lower(l)(i, j) = ½ (∂_i g_jl + ∂_j g_il − ∂_l g_ij)
  std::array<Mat, kMaxDim> lower;
  for (int l = 0; l < n; ++l) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        m(i, j) = 0.5 * (dg[static_cast<std::size_t>(i)](j, l) + dg[static_cast<std::size_t>(j)](i, l) -
                         dg[static_cast<std::size_t>(l)](i, j));
    lower[static_cast<std::size_t>(l)] = m;
  }
  for (int k = 0; k < n; ++k) {
    Mat m = Mat::Zero(n, n);
    for (int l = 0; l < n; ++l) m += ginv(k, l) * lower[static_cast<std::size_t>(l)];
    // exact symmetry in (i, j)
    c.upper[static_cast<std::size_t>(k)] = 0.5 * (m + m.transpose());
  }
  return c;
}

Vec Manifold::wrap(const Vec& x) const {
  Vec y = x;
  for (int i = 0; i < y.size(); ++i)
    if (periods_[i] > 0.0) {
      y[i] = std::fmod(y[i], periods_[i]);
      if (y[i] < 0.0) y[i] += periods_[i];
    }
  return y;
}

Vec Manifold::shortest_displacement(const Vec& x, const Vec& y) const {
  Vec d = y - x;
  for (int i = 0; i < d.size(); ++i)
    if (periods_[i] > 0.0) d[i] -= periods_[i] * std::round(d[i] / periods_[i]);
  return d;
}

double Manifold::chart_distance(const Vec& x, const Vec& y) const {
  if (!is_chart()) {
    // Length of the projected straight segment, as a polyline.
    constexpr int pieces = 256;
    double len = 0.0;
    Vec prev = project(x);
    for (int i = 1; i <= pieces; ++i) {
      const double s = static_cast<double>(i) / pieces;
      const Vec cur = (i == pieces) ? project(y) : project(Vec((1.0 - s) * x + s * y));
      len += (cur - prev).norm();
      prev = cur;
    }
    return len;
  }
  const Vec d = shortest_displacement(x, y);
  if (d.isZero(0.0)) return 0.0;
  if (flat_) return d.norm();
  // composite Gauss-Legendre, 4 panels x 16 nodes
  constexpr int panels = 4;
  double len = 0.0;
  for (int p = 0; p < panels; ++p)
    for (const auto& [s, w] : gauss_legendre_16()) {
      const double t = (p + s) / panels;
      len += (w / panels) * norm(Vec(x + t * d), d);
    }
  return len;
}

const Embedding& Manifold::embedding() const {
  if (!embedding_) throw GeometryError("manifold is not embedded");
  return *embedding_;
}

Vec Manifold::normal(const Vec& z) const {
  const Vec g = embedding().constraint_gradient(z);
  const double n = g.norm();
  if (!(n > 0.0)) throw GeometryError("degenerate constraint gradient at " + format_point(z));
  return g / n;
}

Mat Manifold::tangent_projection(const Vec& z) const {
  const Vec n = normal(z);
  return Mat::Identity(z.size(), z.size()) - n * n.transpose();
}

Mat Manifold::normal_projection(const Vec& z) const {
  const Vec n = normal(z);
  return n * n.transpose();
}

Mat Manifold::tangent_basis(const Vec& z) const {
  const Vec n = normal(z);
  const int a = static_cast<int>(z.size());
  // Complete n to an orthonormal frame with a Householder reflection that maps
  // e_p to ±n, where p is the largest component of n.
  int p = 0;
  n.cwiseAbs().maxCoeff(&p);
  Vec e = Vec::Zero(a);
  e[p] = 1.0;
  const double sign = n[p] >= 0.0 ? 1.0 : -1.0;
  Vec u = e + sign * n;
  const double un = u.squaredNorm();
  Mat h = Mat::Identity(a, a) - 2.0 * u * u.transpose() / un;  // h e_p = -sign n
  Mat basis(a, a - 1);
  int col = 0;
  for (int j = 0; j < a; ++j)
    if (j != p) basis.col(col++) = h.col(j);
  return basis;
}

Vec Manifold::project(const Vec& z) const {
  if (is_chart()) return z;
  return embedding().project(z);
}

bool Box::contains(const Vec& x, double slack) const {
  for (int i = 0; i < x.size(); ++i)
    if (x[i] < lo[i] - slack || x[i] > hi[i] + slack) return false;
  return true;
}

Vec Box::clamp(const Vec& x) const { return x.cwiseMax(lo).cwiseMin(hi); }

}  // namespace varorbit
