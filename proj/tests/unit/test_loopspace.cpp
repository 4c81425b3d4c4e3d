#include "fixtures.hpp"

#include <doctest.h>

#include <random>

using namespace fixtures;
using namespace varorbit;

namespace {

Eigen::VectorXi wind(std::initializer_list<int> w) {
  Eigen::VectorXi out(static_cast<int>(w.size()));
  int i = 0;
  for (int x : w) out[i++] = x;
  return out;
}

Loop torus_geodesic(int n, Eigen::VectorXi w, double T = 1.0, Vec x0 = vec({0.1, 0.2})) {
  return sample_loop([&](double t) { return Vec(x0 + t * Vec(w.cast<double>())); }, T, n, w);
}

LoopTangent random_tangent(std::mt19937_64& rng, const Manifold& m, const Loop& loop) {
  std::normal_distribution<double> nd;
  LoopTangent t = LoopTangent::zero(loop.coord_dim(), loop.size());
  for (int i = 0; i < loop.size(); ++i) {
    for (int r = 0; r < loop.coord_dim(); ++r) t.xi(r, i) = nd(rng);
    if (!m.is_chart()) t.xi.col(i) = m.tangent_projection(loop.point(i)) * Vec(t.xi.col(i));
  }
  t.alpha = nd(rng);
  return t;
}

// Directional derivative of the action along t, by central differences in a
// chart (ambient coordinates for embedded loops; the action extends smoothly).
double fd_directional(const Lagrangian& L, double k, const Loop& loop, const LoopTangent& t, double eps) {
  Loop p = loop, q = loop;
  p.samples += eps * t.xi;
  q.samples -= eps * t.xi;
  p.period += eps * t.alpha;
  q.period -= eps * t.alpha;
  return (action(L, k, p) - action(L, k, q)) / (2 * eps);
}

}  // namespace

TEST_SUITE("loopspace") {
  TEST_CASE("action closed forms") {
    CHECK(action(kinetic(plane()), 0.5, constant_loop(vec({0.3, -1}), 2.0, 32)) == doctest::Approx(1.0));
    CHECK(action(kinetic(torus()), 0.5, torus_geodesic(64, wind({1, 0}))) == doctest::Approx(1.0).epsilon(1e-14));
    // S_k of the cyclotron is 2πk/B, up to the O(N⁻²) quadrature error
    CHECK(action(magnetic_plane(1.0), 0.5, cyclotron(512)) == doctest::Approx(kPi).epsilon(1e-4));
    Loop bad = constant_loop(vec({0, 0}), 1.0, 16);
    bad.period = -1;
    CHECK_THROWS_AS(action(kinetic(plane()), 0.5, bad), LoopError);
  }

  TEST_CASE("quadrature converges at second order") {
    const auto M = magnetic_plane(1.0);
    std::vector<double> err;
    for (int n = 64; n <= 512; n *= 2) err.push_back(std::abs(action(M, 0.5, cyclotron(n)) - kPi));
    for (std::size_t i = 0; i + 1 < err.size(); ++i) {
      const double ratio = err[i] / err[i + 1];
      CHECK(ratio >= 3.5);
      CHECK(ratio <= 4.5);
    }
  }

  TEST_CASE("differential special cases") {
    const auto d0 = differential(kinetic(plane()), 0.7, constant_loop(vec({1, 2}), 3.0, 16));
    CHECK(d0.dS.position.norm() == 0.0);
    CHECK(d0.dS.period == doctest::Approx(0.7));
    const int n = 64;
    const auto dg = differential(kinetic(torus()), 0.5, torus_geodesic(n, wind({1, 0})));
    CHECK(std::sqrt(dg.dS.position.squaredNorm() + dg.dS.period * dg.dS.period) < 1e-8 * n);
  }

  TEST_CASE("differential is the exact gradient of the discrete action") {
    std::mt19937_64 rng(42);
    struct Case {
      Lagrangian L;
      Eigen::VectorXi w;
    };
    varorbit::ScalarField V;
    V.value = [](const Vec& x) { return 0.3 * std::cos(x[0]) * std::sin(x[1]); };
    V.gradient = [](const Vec& x) { return vec({-0.3 * std::sin(x[0]) * std::sin(x[1]), 0.3 * std::cos(x[0]) * std::cos(x[1])}); };
    std::vector<Case> cases{{magnetic_plane(1.0), {}},
                            {torus_potential(), wind({1, 0})},
                            {Lagrangian(cylinder(), {}, V), wind({0, 1})},
                            {kinetic(sphere()), {}},
                            {magnetic_plane(1.0).with_cap({1.0, 0.5}), {}}};
    int worst = 0;
    double worst_err = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      const auto& c = cases[static_cast<std::size_t>(trial) % cases.size()];
      const Manifold& m = c.L.manifold();
      const Loop loop = random_loop(rng, m, 16 + (trial % 3) * 8, 1.0 + (trial % 7) * 0.4, c.w);
      const auto t = random_tangent(rng, m, loop);
      const double exact = differential(c.L, 0.5, loop).dS.apply(t);
      const double fd = fd_directional(c.L, 0.5, loop, t, 1e-6);
      const double rel = std::abs(exact - fd) / std::max(1.0, std::abs(exact));
      if (rel > worst_err) {
        worst_err = rel;
        worst = trial;
      }
    }
    INFO("worst trial " << worst);
    CHECK(worst_err < 1e-5);
  }

  TEST_CASE("riesz solve matches a dense solve on a flat chart") {
    std::mt19937_64 rng(3);
    const int n = 16;
    const auto L = magnetic_plane(1.0);
    const Loop loop = random_loop(rng, L.manifold(), n, 2.0);
    const auto d = differential(L, 0.5, loop);
    const auto grad = riesz_gradient(L, loop, d.dS);
    // Dense matrix of ⟨ξ,η⟩ = ξ₀·η₀ + N Σ (ξ_{i+1}−ξ_i)·(η_{i+1}−η_i), per coordinate.
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
    G(0, 0) += 1;
    for (int i = 0; i < n; ++i) {
      const int j = (i + 1) % n;
      G(i, i) += n;
      G(j, j) += n;
      G(i, j) -= n;
      G(j, i) -= n;
    }
    const Eigen::MatrixXd ref = G.fullPivLu().solve(Eigen::MatrixXd(d.dS.position.transpose())).transpose();
    CHECK((grad.xi - ref).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(grad.alpha == d.dS.period);
    const auto zero = riesz_gradient(L, loop, LoopCovector{Eigen::MatrixXd::Zero(2, n), 0.0});
    CHECK(zero.xi.norm() == 0.0);
    CHECK(zero.alpha == 0.0);
  }

  TEST_CASE("riesz identity and positivity") {
    std::mt19937_64 rng(8);
    std::vector<std::pair<Lagrangian, Eigen::VectorXi>> cases{
        {magnetic_plane(1.0), {}}, {kinetic(cylinder()), wind({0, 1})}, {kinetic(sphere()), {}}};
    for (int trial = 0; trial < 60; ++trial) {
      const auto& [L, w] = cases[static_cast<std::size_t>(trial) % cases.size()];
      const Loop loop = random_loop(rng, L.manifold(), 32, 1.5, w);
      const auto d = differential(L, 0.5, loop);
      RieszSolver solver(L.manifold_ptr());
      solver.factorize(loop);
      const auto g = solver.solve(d.dS);
      const double gg = solver.inner(g, g);
      CHECK(gg > 0.0);
      CHECK(std::abs(gg - d.dS.apply(g)) <= 1e-10 * gg);
      if (!L.manifold().is_chart())
        for (int i = 0; i < loop.size(); ++i)
          CHECK(std::abs(loop.point(i).dot(Vec(g.xi.col(i)))) < 1e-12 * std::max(1.0, g.xi.col(i).norm()));
    }
  }

  TEST_CASE("lengths, distances and classes") {
    CHECK(length(*plane(), constant_loop(vec({1, 1}), 1.0, 16)) == 0.0);
    CHECK(length(*torus(), torus_geodesic(32, wind({1, 0}))) == doctest::Approx(1.0));
    CHECK(length(*cylinder(), sample_loop([](double t) { return vec({0, 2 * kPi * t}); }, 1.0, 64, wind({0, 1}))) ==
          doctest::Approx(2 * kPi));
    CHECK(loop_set_distance(*plane(), constant_loop(vec({0, 0}), 1, 16), constant_loop(vec({0.3, 0}), 1, 16)) ==
          doctest::Approx(0.3));
    CHECK(homotopy_class(*torus(), constant_loop(vec({0, 0}), 1, 16)) == wind({0, 0}));
    CHECK(homotopy_class(*torus(), torus_geodesic(16, wind({2, 1}))) == wind({2, 1}));
    CHECK(homotopy_class(*cylinder(), sample_loop([](double t) { return vec({0, 2 * kPi * t}); }, 1.0, 16, wind({0, 1})))[1] == 1);
    CHECK_THROWS_AS(homotopy_class(*sphere(), random_loop(*std::make_unique<std::mt19937_64>(1), *sphere(), 16, 1.0)),
                    LoopError);
  }

  TEST_CASE("rotation of the sample index") {
    std::mt19937_64 rng(4);
    const auto L = torus_potential();
    const Loop loop = random_loop(rng, L.manifold(), 64, 1.3, wind({1, 1}));
    const double s = action(L, 0.5, loop);
    for (int shift : {1, 7, 63, -5}) {
      const Loop r = rotate_samples(L.manifold(), loop, shift);
      CHECK(std::abs(action(L, 0.5, r) - s) < 1e-12);
      CHECK(r.winding == loop.winding);
    }
  }

  TEST_CASE("trigonometric resampling") {
    const auto L = magnetic_plane(1.0);
    const Loop coarse = cyclotron(32);
    const Loop fine = resample(L.manifold(), coarse, 256);
    CHECK((fine.samples - cyclotron(256).samples).cwiseAbs().maxCoeff() < 1e-12);
    const Loop g = torus_geodesic(16, wind({1, 2}));
    const Loop g2 = resample(*torus(), g, 40);
    CHECK((g2.samples - torus_geodesic(40, wind({1, 2})).samples).cwiseAbs().maxCoeff() < 1e-12);
    std::mt19937_64 rng(1);
    const Loop s = random_loop(rng, *sphere(), 32, 1.0);
    const Loop s2 = resample(*sphere(), s, 64);
    for (int i = 0; i < 64; ++i) CHECK(std::abs(s2.point(i).norm() - 1.0) < 1e-14);
    CHECK((s2.samples.col(0) - s.samples.col(0)).norm() < 1e-10);
  }

  TEST_CASE("advance keeps loops valid") {
    std::mt19937_64 rng(6);
    const auto S = sphere();
    const Loop loop = random_loop(rng, *S, 32, 1.0);
    validate_loop(*S, loop);
    const auto t = random_tangent(rng, *S, loop);
    const Loop moved = advance(*S, loop, t, -0.3);
    validate_loop(*S, moved);
    CHECK(moved.period > 0.0);
    CHECK(moved.period == doctest::Approx(std::exp(-0.3 * t.alpha)));
  }

  TEST_CASE("validation") {
    CHECK_THROWS_AS(validate_loop(*plane(), constant_loop(vec({0, 0}), 1.0, 4)), LoopError);
    Loop off = constant_loop(vec({1, 0, 0}), 1.0, 16);
    off.winding.resize(0);
    off.samples(0, 3) = 1.1;
    CHECK_THROWS_AS(validate_loop(*sphere(), off), LoopError);
    Loop w = constant_loop(vec({0, 0}), 1.0, 16);
    w.winding[0] = 1;
    CHECK_THROWS_AS(validate_loop(*plane(), w), LoopError);
  }

  TEST_CASE("path speed bounds endpoint distance on flat charts") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> uni(0.05, 1.0);
    const double c = std::sqrt(1 + 2 * std::sqrt(6.0));
    int violations = 0, paths = 0;
    for (double delta : {0.01, 0.1, 1.0}) {
      for (int p = 0; p < 100; ++p) {
        const auto m = (p % 2) ? torus() : plane();
        const Eigen::VectorXi w = (p % 2) ? wind({1, 0}) : wind({0, 0});
        PathOfLoops path;
        path.nodes.push_back(random_loop(rng, *m, 16, 1.0 + uni(rng), w));
        const int segs = 1 + p % 6;
        for (int s = 0; s < segs; ++s) {
          const Loop& a = path.nodes.back();
          auto t = random_tangent(rng, *m, a);
          const double nt = [&] {
            RieszSolver solver(m);
            solver.factorize(a);
            return solver.norm(t);
          }();
          t = t * (uni(rng) * delta / segs / nt);
          Loop b = a;
          b.samples += t.xi;
          b.period += t.alpha;
          if (b.period <= 0) b.period = a.period;
          path.nodes.push_back(b);
        }
        const double speed = path_speed(*m, path);
        CHECK(speed <= delta * (1 + 1e-12));
        const auto& x0 = path.nodes.front();
        const auto& x1 = path.nodes.back();
        if (loop_set_distance(*m, x0, x1) > c * delta + 1e-12) ++violations;
        if (std::abs(x1.period - x0.period) > delta + 1e-12) ++violations;
        ++paths;
      }
    }
    CHECK(paths == 300);
    CHECK(violations == 0);
  }
}
