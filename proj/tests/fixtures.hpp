#pragma once

#include "varorbit/loopspace.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

namespace fixtures {

using varorbit::Box;
using varorbit::Lagrangian;
using varorbit::Manifold;
using varorbit::ManifoldPtr;
using varorbit::Mat;
using varorbit::Vec;

inline constexpr double kPi = std::numbers::pi;

inline Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline ManifoldPtr plane() { return std::make_shared<Manifold>(Manifold::flat(2, vec({0, 0}))); }
inline ManifoldPtr torus() { return std::make_shared<Manifold>(Manifold::flat(2, vec({1, 1}))); }
inline ManifoldPtr sphere() { return std::make_shared<Manifold>(Manifold::sphere(1.0)); }

// dr² + β(r) dθ² on R × S¹, coordinates (r, θ), θ of period 2π.
inline ManifoldPtr warped_cylinder(std::function<double(double)> beta, std::function<double(double)> dbeta,
                                   bool analytic = true) {
  varorbit::ChartMetric g;
  g.value = [beta](const Vec& x) {
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = 1.0;
    m(1, 1) = beta(x[0]);
    return m;
  };
  if (analytic)
    g.derivatives = [dbeta](const Vec& x, std::span<Mat> out) {
      out[0] = Mat::Zero(2, 2);
      out[0](1, 1) = dbeta(x[0]);
      out[1] = Mat::Zero(2, 2);
    };
  return std::make_shared<Manifold>(Manifold::periodic_chart({"r", "theta"}, vec({0, 2 * kPi}), g));
}

inline ManifoldPtr cylinder() {
  return warped_cylinder([](double r) { return 1 + r * r; }, [](double r) { return 2 * r; });
}
inline ManifoldPtr cylinder_exp() {
  return warped_cylinder([](double r) { return std::exp(2 * r); }, [](double r) { return 2 * std::exp(2 * r); });
}

// θ = (B/2)(−y dx + x dy), dθ = B dx∧dy.
inline varorbit::OneForm symmetric_gauge(double B) {
  varorbit::OneForm th;
  th.value = [B](const Vec& x) { return vec({-0.5 * B * x[1], 0.5 * B * x[0]}); };
  th.jacobian = [B](const Vec&) {
    Mat J = Mat::Zero(2, 2);
    J(0, 1) = 0.5 * B;   // ∂_x θ_y
    J(1, 0) = -0.5 * B;  // ∂_y θ_x
    return J;
  };
  return th;
}

inline Lagrangian kinetic(ManifoldPtr m) { return Lagrangian(std::move(m)); }
inline Lagrangian magnetic_plane(double B = 1.0) { return Lagrangian(plane(), symmetric_gauge(B)); }

// V(x) = −cos(2π x₁) on the flat torus.
inline Lagrangian torus_potential() {
  varorbit::ScalarField V;
  V.value = [](const Vec& x) { return -std::cos(2 * kPi * x[0]); };
  V.gradient = [](const Vec& x) { return vec({2 * kPi * std::sin(2 * kPi * x[0]), 0.0}); };
  return Lagrangian(torus(), {}, V);
}

// Cyclotron orbit of the magnetic plane at k = ½: circle of radius 1/B at unit
// speed. With θ = ½B(−y, x) the Euler-Lagrange equation is ẍ = B(ẏ, −ẋ), so
// the motion is clockwise.
inline varorbit::Loop cyclotron(int n, double radius = 1.0, double B = 1.0) {
  const double period = 2 * kPi / B;
  return varorbit::circle_loop(vec({0, 0}), radius, 0, 1, -1, period, n);
}

inline Box box(Vec lo, Vec hi) { return Box{std::move(lo), std::move(hi)}; }

inline varorbit::Loop random_loop(std::mt19937_64& rng, const Manifold& m, int n, double T,
                                  Eigen::VectorXi winding = {}, double amp = 0.3, int modes = 3) {
  std::normal_distribution<double> nd(0.0, 1.0);
  const int d = m.coord_dim();
  if (!m.is_chart()) {
    Mat c(3, 2 * modes + 1);
    for (int r = 0; r < 3; ++r)
      for (int j = 0; j < c.cols(); ++j) c(r, j) = nd(rng) * (j == 0 ? 1.0 : amp / j);
    return varorbit::sample_loop(
        [&](double t) {
          Vec z = c.col(0);
          for (int j = 1; j <= modes; ++j)
            z += c.col(2 * j - 1) * std::cos(2 * kPi * j * t) + c.col(2 * j) * std::sin(2 * kPi * j * t);
          return m.project(z);
        },
        T, n, Eigen::VectorXi());
  }
  if (winding.size() == 0) winding = Eigen::VectorXi::Zero(d);
  Eigen::MatrixXd c(d, 2 * modes + 1);
  for (int r = 0; r < d; ++r)
    for (int j = 0; j < c.cols(); ++j) c(r, j) = nd(rng) * (j == 0 ? 0.5 : amp / (j + 1) * 2);
  return varorbit::sample_loop(
      [&](double t) {
        Vec x = c.col(0);
        for (int j = 1; j <= modes; ++j)
          x += Vec(c.col(2 * j - 1) * std::cos(2 * kPi * j * t) + c.col(2 * j) * std::sin(2 * kPi * j * t));
        for (int r = 0; r < d; ++r) x[r] += winding[r] * m.periods()[r] * t;
        return x;
      },
      T, n, winding);
}

}  // namespace fixtures
