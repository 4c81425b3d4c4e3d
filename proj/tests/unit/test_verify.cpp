#include "varorbit/verify.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <random>

using namespace fixtures;
using namespace varorbit;

namespace {

Loop great_circle(int n) {
  return sample_loop([](double t) { return vec({std::cos(2 * kPi * t), std::sin(2 * kPi * t), 0}); }, 2 * kPi, n,
                     Eigen::VectorXi());
}

Loop torus_geodesic(int n) {
  Eigen::VectorXi w(2);
  w << 1, 0;
  return sample_loop([](double t) { return vec({0.1 + t, 0.2}); }, 1.0, n, w);
}

}  // namespace

TEST_SUITE("verify") {
  TEST_CASE("euler-lagrange residual") {
    CHECK(el_residual(kinetic(torus()), torus_geodesic(64)) < 1e-8);
    CHECK(el_residual(magnetic_plane(1.0), cyclotron(256)) < 1e-6);
    CHECK(el_residual(kinetic(sphere()), great_circle(256)) < 1e-6);
    // counter-clockwise circle is not a solution for B = 1
    const Loop ccw = circle_loop(vec({0, 0}), 1.0, 0, 1, 1, 2 * kPi, 256);
    CHECK(el_residual(magnetic_plane(1.0), ccw) > 1.0);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 10; ++i) CHECK(el_residual(magnetic_plane(1.0), random_loop(rng, *plane(), 64, 2.0)) > 0.01);
    // the waist of the warped cylinder is a geodesic, other latitudes are not
    Eigen::VectorXi w(2);
    w << 0, 1;
    const auto K = kinetic(cylinder());
    CHECK(el_residual(K, sample_loop([](double t) { return vec({0, 2 * kPi * t}); }, 2 * kPi, 128, w)) < 1e-10);
    CHECK(el_residual(K, sample_loop([](double t) { return vec({0.5, 2 * kPi * t}); }, 2 * kPi, 128, w)) > 0.1);
  }

  TEST_CASE("energy deviation") {
    CHECK(energy_deviation(magnetic_plane(1.0), cyclotron(256), 0.5) < 1e-8);
    const auto P = torus_potential();
    const Vec x = vec({0.2, 0.4});
    CHECK(energy_deviation(P, constant_loop(x, 1.0, 16), 0.3) == doctest::Approx(std::abs(0.3 + P.V(x))));
  }

  TEST_CASE("shooting") {
    const auto M = magnetic_plane(1.0);
    const auto c = shoot(M, vec({1, 0}), vec({0, -1}), 2 * kPi);
    CHECK(c.closure < 1e-9);
    CHECK(c.energy_drift < 1e-10);
    CHECK_FALSE(c.diverged);
    const auto g = shoot(kinetic(torus()), vec({0.1, 0.2}), vec({1, 0}), 1.0);
    CHECK(g.closure < 1e-12);
    const double order = shooting_order(M, vec({1, 0}), vec({0, -1}), 2 * kPi);
    CHECK(order >= 3.5);
    CHECK(order <= 4.5);
    // geodesic equation on the warped cylinder and the sphere
    CHECK(shoot(kinetic(cylinder()), vec({0, 0}), vec({0, 1}), 2 * kPi).closure < 1e-9);
    const auto s = shoot(kinetic(sphere()), vec({1, 0, 0}), vec({0, 0.6, 0.8}), 2 * kPi);
    CHECK(s.closure < 1e-8);
    CHECK(s.energy_drift < 1e-10);
    // motion under the potential force conserves E = ½|v|² − V
    const auto p = shoot(torus_potential(), vec({0.05, 0}), vec({0, 0}), 3.0);
    CHECK(p.energy_drift < 1e-8);
  }

  TEST_CASE("shooting divergence is reported") {
    varorbit::ScalarField V;
    V.value = [](const Vec& x) { return std::pow(x[0], 4); };
    V.gradient = [](const Vec& x) { return vec({4 * std::pow(x[0], 3), 0}); };
    const auto r = shoot(Lagrangian(plane(), {}, V), vec({2, 0}), vec({1, 0}), 10.0, 256);
    CHECK(r.diverged);
  }

  TEST_CASE("certificates") {
    const auto M = magnetic_plane(1.0);
    const auto c = certify(M, 0.5, cyclotron(256), OrbitMethod::MountainPass);
    CHECK(c.pass);
    CHECK(c.action == doctest::Approx(kPi).epsilon(1e-4));
    CHECK(c.length == doctest::Approx(2 * kPi).epsilon(1e-4));
    const auto s = certify(kinetic(sphere()), 0.5, great_circle(256), OrbitMethod::Sweepout);
    CHECK(s.pass);
    CHECK(s.action == doctest::Approx(2 * kPi).epsilon(1e-3));
    std::mt19937_64 rng(8);
    const auto r = certify(M, 0.5, random_loop(rng, *plane(), 64, 2.0), OrbitMethod::MountainPass);
    CHECK_FALSE(r.pass);
    CHECK(std::find(r.failures.begin(), r.failures.end(), "el_residual") != r.failures.end());
    // a constant loop has non-positive action only when required to be positive
    const auto cl = certify(kinetic(plane()), 0.0, constant_loop(vec({0, 0}), 1.0, 16), OrbitMethod::MountainPass);
    CHECK(std::find(cl.failures.begin(), cl.failures.end(), "action") != cl.failures.end());
  }

  TEST_CASE("shooting reproduces certified loops") {
    const auto M = magnetic_plane(1.0);
    const Loop loop = cyclotron(256);
    const auto c = certify(M, 0.5, loop, OrbitMethod::MountainPass);
    REQUIRE(c.pass);
    const auto v = sample_velocities(M.manifold(), loop, 6);
    const auto sh = shoot(M, loop.point(0), Vec(v.col(0)), loop.period, 4096, loop.size());
    CHECK((sh.trajectory - loop.samples).cwiseAbs().maxCoeff() < 10 * std::max(c.el_residual, 1e-9));
  }
}
