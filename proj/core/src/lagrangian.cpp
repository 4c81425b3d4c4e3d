#include "varorbit/lagrangian.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace varorbit {

Smoothstep smoothstep5(double u) {
  if (u <= 0.0) return {0.0, 0.0, 0.0};
  if (u >= 1.0) return {1.0, 0.0, 0.0};
  const double u2 = u * u;
  const double w = 1.0 - u;
  return {u2 * u * (10.0 - 15.0 * u + 6.0 * u2), 30.0 * u2 * w * w, 60.0 * u * w * (1.0 - 2.0 * u)};
}

Vec halton(int index, int dim) {
  static constexpr int primes[kMaxDim] = {2, 3, 5, 7, 11, 13};
  Vec p(dim);
  for (int d = 0; d < dim; ++d) {
    const int base = primes[d];
    double f = 1.0, r = 0.0;
    for (int i = index + 1; i > 0; i /= base) {
      f /= base;
      r += f * (i % base);
    }
    p[d] = r;
  }
  return p;
}

Lagrangian::Lagrangian(ManifoldPtr manifold, OneForm theta, ScalarField potential, std::optional<QuadraticCap> cap)
    : manifold_(std::move(manifold)), theta_(std::move(theta)), potential_(std::move(potential)), cap_(cap) {
  if (!manifold_) throw LagrangianError("Lagrangian needs a manifold");
  if (!theta_.is_zero() && !theta_.jacobian) throw LagrangianError("1-form needs its Jacobian");
  if (!potential_.is_zero() && !potential_.gradient) throw LagrangianError("potential needs its gradient");
  if (cap_ && !(cap_->radius > 0.0 && cap_->blend > 0.0))
    throw LagrangianError("quadratic cap needs positive radius and blend width");
}

Vec Lagrangian::theta_at(const Vec& x) const {
  if (theta_.is_zero()) return Vec::Zero(x.size());
  return theta_.value(x);
}

Mat Lagrangian::two_form(const Vec& x) const {
  if (theta_.is_zero()) return Mat::Zero(x.size(), x.size());
  const Mat J = theta_.jacobian(x);
  return J - J.transpose();
}

namespace {

void check_input(const Vec& x, const Vec& v) {
  if (!x.allFinite() || !v.allFinite()) throw LagrangianError("non-finite point or velocity");
}

}  // namespace

LagrangianJet Lagrangian::jet(const Vec& x, const Vec& v) const {
  check_input(x, v);
  const Manifold& m = *manifold_;
  const int n = static_cast<int>(x.size());
  LagrangianJet j;
  Vec gv;
  Vec lx_kin = Vec::Zero(n);
  if (m.is_chart() && !m.is_flat()) {
    const Mat g = m.metric(x);
    gv = g * v;
    const auto dg = m.metric_derivatives(x);
    for (int i = 0; i < n; ++i) lx_kin[i] = 0.5 * v.dot(dg[static_cast<std::size_t>(i)] * v);
  } else {
    gv = v;
  }
  const double s2 = v.dot(gv);
  const double kin = 0.5 * s2;

  if (is_pure_kinetic()) {
    j.value = kin;
    j.Lv = gv;
    j.Lx = lx_kin;
    return j;
  }

  Vec th = Vec::Zero(n);
  Vec lx_q = Vec::Zero(n);
  double q = 0.0;
  if (!theta_.is_zero()) {
    th = theta_.value(x);
    q += th.dot(v);
    lx_q += theta_.jacobian(x) * v;
  }
  if (!potential_.is_zero()) {
    q += potential_.value(x);
    lx_q += potential_.gradient(x);
  }

  double chi = 1.0, dchi = 0.0, s = 0.0;
  if (cap_) {
    s = std::sqrt(s2);
    const auto step = smoothstep5((s - cap_->radius) / cap_->blend);
    chi = 1.0 - step.h;
    dchi = -step.dh / cap_->blend;
  }
  j.value = kin + chi * q;
  j.Lv = gv + chi * th;
  j.Lx = lx_kin + chi * lx_q;
  if (dchi != 0.0) {
    j.Lv += (dchi * q / s) * gv;
    j.Lx += (dchi * q / s) * lx_kin;
  }
  return j;
}

double Lagrangian::value(const Vec& x, const Vec& v) const { return jet(x, v).value; }
Vec Lagrangian::Lv(const Vec& x, const Vec& v) const { return jet(x, v).Lv; }
Vec Lagrangian::Lx(const Vec& x, const Vec& v) const { return jet(x, v).Lx; }

double Lagrangian::energy(const Vec& x, const Vec& v) const {
  const auto j = jet(x, v);
  return j.Lv.dot(v) - j.value;
}

Mat Lagrangian::Lvv(const Vec& x, const Vec& v) const {
  check_input(x, v);
  const Mat g = manifold_->metric(x);
  if (!cap_ || is_pure_kinetic()) return g;
  const Vec gv = g * v;
  const double s = std::sqrt(v.dot(gv));
  const auto step = smoothstep5((s - cap_->radius) / cap_->blend);
  if (step.dh == 0.0 && step.ddh == 0.0) return g;
  const double chi1 = -step.dh / cap_->blend;
  const double chi2 = -step.ddh / (cap_->blend * cap_->blend);
  const Vec th = theta_at(x);
  const double q = th.dot(v) + V(x);
  Mat h = g;
  h += (chi1 / s) * (th * gv.transpose() + gv * th.transpose());
  h += q * ((chi2 / (s * s)) * (gv * gv.transpose()) + chi1 * (g / s - gv * gv.transpose() / (s * s * s)));
  return h;
}

Lagrangian Lagrangian::with_cap(QuadraticCap cap) const { return Lagrangian(manifold_, theta_, potential_, cap); }

std::vector<Vec> sample_region(const Manifold& m, const Box& region, int per_axis) {
  const int d = region.dim();
  std::vector<Vec> pts;
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  for (;;) {
    Vec u(d);
    for (int i = 0; i < d; ++i) u[i] = per_axis > 1 ? static_cast<double>(idx[static_cast<std::size_t>(i)]) / (per_axis - 1) : 0.5;
    Vec x = region.at(u);
    if (!m.is_chart()) {
      if (x.norm() < 1e-9) x[0] += 1e-3;
      x = m.project(x);
    }
    pts.push_back(x);
    int i = 0;
    while (i < d && ++idx[static_cast<std::size_t>(i)] == per_axis) idx[static_cast<std::size_t>(i++)] = 0;
    if (i == d) break;
  }
  return pts;
}

namespace {

// Maximizes f over the region with Halton sampling plus projected gradient
// ascent from the best few samples.
double maximize_over_region(const Manifold& m, const Box& region, int samples,
                            const std::function<double(const Vec&)>& f,
                            const std::function<Vec(const Vec&)>& grad) {
  if (samples < 1) throw LagrangianError("need at least one sample");
  if ((region.hi - region.lo).minCoeff() < 0.0) throw LagrangianError("empty region");
  auto place = [&](Vec x) {
    x = region.clamp(x);
    if (!m.is_chart()) {
      if (x.norm() < 1e-12) x[0] = 1e-6;
      x = m.project(x);
    }
    return x;
  };
  std::vector<std::pair<double, Vec>> best;
  for (int i = 0; i < samples; ++i) {
    const Vec x = place(region.at(halton(i, region.dim())));
    best.emplace_back(f(x), x);
  }
  std::stable_sort(best.begin(), best.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  double result = best.front().first;
  const double scale = std::max(1e-12, (region.hi - region.lo).maxCoeff());
  const std::size_t starts = std::min<std::size_t>(4, best.size());
  for (std::size_t s = 0; s < starts; ++s) {
    Vec x = best[s].second;
    double fx = best[s].first;
    double step = 0.1 * scale;
    for (int it = 0; it < 400 && step > 1e-15 * scale; ++it) {
      Vec g = grad(x);
      if (!m.is_chart()) g = m.tangent_projection(x) * g;
      const double gn = g.norm();
      if (gn < 1e-14) break;
      const Vec y = place(Vec(x + (step / gn) * g));
      const double fy = f(y);
      if (fy > fx) {
        x = y;
        fx = fy;
        step *= 1.5;
      } else {
        step *= 0.5;
      }
    }
    result = std::max(result, fx);
  }
  return result;
}

}  // namespace

double e0_estimate(const Lagrangian& L, const Box& region, int samples) {
  const Manifold& m = L.manifold();
  const Vec zero = Vec::Zero(m.coord_dim());
  return maximize_over_region(
      m, region, samples, [&](const Vec& x) { return -L.value(x, zero); },
      [&](const Vec& x) { return Vec(-L.Lx(x, zero)); });
}

double quad_cap_radius(const Lagrangian& L, double k, const Box& region) {
  double sup_v = 0.0;
  if (!L.potential().is_zero())
    sup_v = maximize_over_region(
        L.manifold(), region, 256, [&](const Vec& x) { return L.potential().value(x); },
        [&](const Vec& x) { return L.potential().gradient(x); });
  const double level = k + 1.0 + sup_v;
  const double rmin = level > 0.0 ? std::sqrt(2.0 * level) : 0.0;
  return rmin > 0.0 ? 2.0 * rmin : 1.0;
}

double quad_cap_blend(const Lagrangian& L, double radius, const Box& region) {
  if (!(radius > 0.0)) throw LagrangianError("cap radius must be positive");
  const Manifold& m = L.manifold();
  std::vector<Vec> pts = sample_region(m, region, 9);
  for (int i = 0; i < 256; ++i) {
    Vec x = region.at(halton(i, region.dim()));
    if (!m.is_chart()) {
      if (x.norm() < 1e-9) x[0] += 1e-3;
      x = m.project(x);
    }
    pts.push_back(x);
  }
  double th = 0.0, pot = 0.0;
  for (const Vec& x : pts) {
    const Vec t = L.theta_at(x);
    if (m.is_chart()) th = std::max(th, std::sqrt(std::max(0.0, t.dot(m.metric(x).ldlt().solve(t)))));
    else th = std::max(th, Vec(m.tangent_projection(x) * t).norm());
    pot = std::max(pot, std::abs(L.V(x)));
  }
  // sampled sups get a safety margin before entering the bound
  th *= 1.25;
  pot *= 1.25;
  // In metric-orthonormal coordinates the blend perturbs the Hessian by at most
  // 2|χ'||θ| + |q||χ''| + |q||χ'|/s with |q| <= |θ|s + |V|, s in [R, R + b],
  // |χ'| <= 1.875/b and |χ''| <= 5.7735/b².
  auto perturbation = [&](double b) {
    return 3.75 * th / b + 5.7735 * (th * (radius + b) + pot) / (b * b) + 1.875 * (th + pot / radius) / b;
  };
  double b = radius / 4.0;
  while (perturbation(b) > 0.5) b *= 1.25;
  return b;
}

Lagrangian quad_cap(const Lagrangian& L, double k, const Box& region) {
  if (L.cap()) return L;
  const double r = quad_cap_radius(L, k, region);
  return L.with_cap({r, quad_cap_blend(L, r, region)});
}

GrowthConstants estimate_growth_constants(const Lagrangian& L, const Box& region, double vmax, int per_axis,
                                          int directions, int speeds) {
  if (!(vmax > 0.0)) throw LagrangianError("vmax must be positive");
  if ((region.hi - region.lo).minCoeff() < 0.0) throw LagrangianError("empty region");
  const Manifold& m = L.manifold();
  const int d = m.dim();
  GrowthConstants gc;
  for (int j = 1; j <= speeds; ++j) gc.radii.push_back(vmax * j / speeds);
  gc.a_profile.assign(gc.radii.size(), -std::numeric_limits<double>::infinity());
  gc.b_profile.assign(gc.radii.size(), -std::numeric_limits<double>::infinity());

  // Unit directions in R^d.
  std::vector<Vec> dirs;
  if (d == 1) {
    dirs = {Vec::Ones(1), Vec(-Vec::Ones(1))};
  } else if (d == 2) {
    for (int i = 0; i < directions; ++i) {
      const double a = 2.0 * std::numbers::pi * i / directions;
      Vec w(2);
      w << std::cos(a), std::sin(a);
      dirs.push_back(w);
    }
  } else {
    for (int i = 0; i < directions; ++i) {
      Vec w = (2.0 * halton(i, d).array() - 1.0).matrix();
      if (w.norm() > 1e-6) dirs.push_back(w.normalized());
    }
  }

  double min_lvv = std::numeric_limits<double>::infinity();
  struct Sample {
    double s, L, lv;
  };
  std::vector<Sample> all;
  for (const Vec& x : sample_region(m, region, per_axis)) {
    Mat basis;  // coordinates -> tangent vectors, orthonormal in the metric
    Mat g = m.metric(x);
    if (m.is_chart()) {
      Eigen::SelfAdjointEigenSolver<Mat> es(g);
      basis = es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal();
    } else {
      basis = m.tangent_basis(x);
    }
    auto covector_norm = [&](const Vec& p) { return Vec(basis.transpose() * p).norm(); };
    gc.sup_theta = std::max(gc.sup_theta, covector_norm(L.theta_at(x)));
    for (const Vec& w : dirs) {
      const Vec u = basis * w;  // metric-unit direction
      for (int j = 0; j <= speeds; ++j) {
        const double s = vmax * j / speeds;
        const Vec v = s * u;
        const auto jet = L.jet(x, v);
        const Mat h = basis.transpose() * L.Lvv(x, v) * basis;
        Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues().minCoeff();
        const double hi = es.eigenvalues().maxCoeff();
        min_lvv = std::min(min_lvv, lo);
        all.push_back({s, jet.value, covector_norm(jet.Lv)});
        for (std::size_t r = 0; r < gc.radii.size(); ++r)
          if (s <= gc.radii[r] * (1.0 + 1e-12)) {
            gc.a_profile[r] = std::max(gc.a_profile[r], jet.value);
            gc.b_profile[r] = std::max(gc.b_profile[r], hi);
          }
      }
    }
  }
  if (!(min_lvv > 0.0))
    throw LagrangianError("fiberwise convexity violated on the sample set (min Hessian eigenvalue " +
                          std::to_string(min_lvv) + "); check the quadratic cap blend");
  gc.A1 = min_lvv;
  gc.A2 = (L.theta().is_zero() ? 0.5 : 0.25) * gc.A1;
  // Quadratic-at-infinity tail: L -> ½|v|², |L_v| -> |v|.
  gc.A4 = 0.5;
  gc.A5 = 1.0;
  for (const auto& smp : all) {
    gc.A3 = std::max(gc.A3, gc.A2 * smp.s * smp.s - smp.L);
    gc.A4 = std::max(gc.A4, smp.L / (1.0 + smp.s * smp.s));
    gc.A5 = std::max(gc.A5, smp.lv / (1.0 + smp.s));
  }
  gc.samples = static_cast<int>(all.size());
  return gc;
}

}  // namespace varorbit
