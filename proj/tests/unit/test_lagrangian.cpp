#include "fixtures.hpp"

#include <doctest.h>

#include <random>

using namespace fixtures;
using varorbit::LagrangianError;

TEST_SUITE("lagrangian") {
  TEST_CASE("closed-form values") {
    const auto K = kinetic(plane());
    const Vec v = vec({1, 0});
    CHECK(K.value(vec({0, 0}), v) == 0.5);
    CHECK(K.Lv(vec({0, 0}), v) == v);
    CHECK(K.Lx(vec({0, 0}), v).norm() == 0.0);
    CHECK(K.Lvv(vec({0, 0}), v) == Mat::Identity(2, 2));

    const auto M = magnetic_plane(1.0);
    CHECK(M.value(vec({0, 1}), v) == doctest::Approx(0.0));
    CHECK(torus_potential().value(vec({0, 0}), vec({0, 0})) == doctest::Approx(-1.0));
  }

  TEST_CASE("energy") {
    const auto M = magnetic_plane(2.0);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    for (int i = 0; i < 20; ++i) {
      const Vec x = vec({nd(rng), nd(rng)});
      Vec v = vec({nd(rng), nd(rng)});
      v.normalize();
      CHECK(M.energy(x, v) == doctest::Approx(0.5));
    }
    const auto P = torus_potential();
    CHECK(P.energy(vec({0, 0}), vec({0, 0})) == doctest::Approx(1.0));
    CHECK(P.energy(vec({0.3, 0}), vec({0, 0})) == doctest::Approx(-P.V(vec({0.3, 0}))));
  }

  TEST_CASE("derivatives agree with finite differences") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    varorbit::ScalarField V;
    V.value = [](const Vec& x) { return std::sin(x[0]) * std::cos(2 * x[1]); };
    V.gradient = [](const Vec& x) {
      return vec({std::cos(x[0]) * std::cos(2 * x[1]), -2 * std::sin(x[0]) * std::sin(2 * x[1])});
    };
    const Lagrangian uncapped(cylinder(), symmetric_gauge(0.7), V);
    const Lagrangian capped = uncapped.with_cap({1.5, 0.4});
    const double h = 1e-6;
    int checked = 0;
    for (const Lagrangian* L : {&uncapped, &capped}) {
      for (int s = 0; s < 500; ++s) {
        const Vec x = vec({u(rng), u(rng)}), v = vec({u(rng), u(rng)});
        const auto jet = L->jet(x, v);
        for (int i = 0; i < 2; ++i) {
          Vec e = Vec::Zero(2);
          e[i] = h;
          const double fv = (L->value(x, Vec(v + e)) - L->value(x, Vec(v - e))) / (2 * h);
          const double fx = (L->value(Vec(x + e), v) - L->value(Vec(x - e), v)) / (2 * h);
          const double sv = std::max(1.0, jet.Lv.cwiseAbs().maxCoeff());
          const double sx = std::max(1.0, jet.Lx.cwiseAbs().maxCoeff());
          CHECK(std::abs(jet.Lv[i] - fv) < 1e-6 * sv);
          CHECK(std::abs(jet.Lx[i] - fx) < 1e-6 * sx);
          Vec e2 = Vec::Zero(2);
          e2[i] = 1e-5;
          const Vec col = (L->Lv(x, Vec(v + e2)) - L->Lv(x, Vec(v - e2))) / 2e-5;
          CHECK((L->Lvv(x, v).col(i) - col).cwiseAbs().maxCoeff() < 1e-5 * std::max(1.0, col.norm()));
        }
        CHECK(std::abs(L->energy(x, v) + jet.value - jet.Lv.dot(v)) < 1e-12 * std::max(1.0, std::abs(jet.value)));
        ++checked;
      }
    }
    CHECK(checked == 1000);
  }

  TEST_CASE("e0 estimates") {
    CHECK(e0_estimate(kinetic(plane()), box(vec({-1, -1}), vec({1, 1})), 64) == 0.0);
    CHECK(e0_estimate(torus_potential(), box(vec({0, 0}), vec({1, 1})), 64) == doctest::Approx(1.0).epsilon(1e-6));
    varorbit::ScalarField V;
    V.value = [](const Vec& x) { return -x.squaredNorm(); };
    V.gradient = [](const Vec& x) { return Vec(-2 * x); };
    const Lagrangian L(plane(), {}, V);
    CHECK(e0_estimate(L, box(vec({-1, -1}), vec({1, 1})), 64) == doctest::Approx(2.0).epsilon(1e-9));
    double prev = -1e300;
    for (int n : {1, 4, 16, 64}) {
      const double e = e0_estimate(torus_potential(), box(vec({0, 0}), vec({1, 1})), n);
      CHECK(e >= prev - 1e-12);
      prev = e;
    }
  }

  TEST_CASE("growth constants") {
    const Box region = box(vec({-2, -2}), vec({2, 2}));
    const auto gk = estimate_growth_constants(kinetic(plane()), region, 3.0);
    CHECK(gk.A1 == doctest::Approx(1.0));
    CHECK(gk.A2 == doctest::Approx(0.5));
    CHECK(gk.A3 == doctest::Approx(0.0));
    CHECK(gk.A4 == doctest::Approx(0.5));
    CHECK(gk.A5 == doctest::Approx(1.0));
    const auto it = std::find_if(gk.radii.begin(), gk.radii.end(), [](double r) { return std::abs(r - 1.0) < 1e-12; });
    REQUIRE(it != gk.radii.end());
    CHECK(gk.a_profile[static_cast<std::size_t>(it - gk.radii.begin())] == doctest::Approx(0.5));

    // Magnetic plane: certified bounds hold on an independent random cloud.
    const auto M = magnetic_plane(1.0);
    const auto gm = estimate_growth_constants(M, region, 3.0);
    // sup |θ| on the box is at the corners: ½·|(2, 2)| = √2
    CHECK(gm.sup_theta == doctest::Approx(std::sqrt(2.0)));
    CHECK(gm.A5 <= 1.0 + gm.sup_theta + 1e-12);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-2, 2), a(0, 2 * kPi), sp(0, 3);
    for (int i = 0; i < 1000; ++i) {
      const Vec x = vec({u(rng), u(rng)});
      const double s = sp(rng), ang = a(rng);
      const Vec v = vec({s * std::cos(ang), s * std::sin(ang)});
      const double Lval = M.value(x, v);
      CHECK(gm.A2 * s * s - gm.A3 <= Lval + 1e-9);
      CHECK(Lval <= gm.A4 * (1 + s * s) + 1e-9);
      CHECK(M.Lv(x, v).norm() <= gm.A5 * (1 + s) + 1e-9);
    }
  }

  TEST_CASE("bad cap blend is detected") {
    // A blend far narrower than the 1-form strength makes the fibers non-convex.
    const Lagrangian L(plane(), symmetric_gauge(40.0), {}, varorbit::QuadraticCap{0.45, 0.1});
    CHECK_THROWS_AS(estimate_growth_constants(L, box(vec({-2, -2}), vec({2, 2})), 2.0), LagrangianError);
  }

  TEST_CASE("quadratic cap") {
    const Box region = box(vec({-3, -3}), vec({3, 3}));
    const auto M = magnetic_plane(1.0);
    CHECK(quad_cap_radius(M, 0.5, region) == doctest::Approx(2 * std::sqrt(3.0)));
    CHECK(quad_cap_radius(kinetic(plane()), 0.0, region) > std::sqrt(2.0));
    const auto C = quad_cap(M, 0.5, region);
    REQUIRE(C.cap());
    const double R = C.cap()->radius, b = C.cap()->blend;

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-3, 3), ang(0, 2 * kPi), sp(0, 1);
    int inside = 0;
    for (int i = 0; i < 2000; ++i) {
      const Vec x = vec({u(rng), u(rng)});
      const double a = ang(rng);
      const Vec v = (sp(rng) * 2 * R) * vec({std::cos(a), std::sin(a)});
      if (M.energy(x, v) <= 0.5 + 1.0) {
        ++inside;
        CHECK(C.value(x, v) == M.value(x, v));
        CHECK(C.Lv(x, v) == M.Lv(x, v));
        CHECK(C.Lx(x, v) == M.Lx(x, v));
        CHECK(C.energy(x, v) == M.energy(x, v));
      }
      const Vec far = (R + b + 0.1 + sp(rng)) * vec({std::cos(a), std::sin(a)});
      CHECK(C.value(x, far) == 0.5 * far.squaredNorm());
    }
    CHECK(inside > 100);
    const auto again = quad_cap(C, 0.5, region);
    CHECK(again.cap()->radius == R);
    CHECK(again.cap()->blend == b);
    const auto g = estimate_growth_constants(C, region, 2 * R);
    CHECK(g.A1 >= 0.5 - 1e-9);
  }

  TEST_CASE("constant loops below e0 have negative action") {
    const auto P = torus_potential();
    const Vec x = vec({0.0, 0.3});
    const double k = 0.5, T = 1.7;
    const auto loop = varorbit::constant_loop(x, T, 16);
    CHECK(varorbit::action(P, k, loop) == doctest::Approx(T * (k - P.energy(x, vec({0, 0})))));
    CHECK(varorbit::action(P, k, loop) < 0.0);
  }

  TEST_CASE("invalid input") {
    CHECK_THROWS_AS(kinetic(plane()).value(vec({NAN, 0}), vec({0, 0})), LagrangianError);
    CHECK_THROWS_AS(Lagrangian(nullptr), LagrangianError);
  }
}
