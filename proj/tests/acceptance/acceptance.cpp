// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. `acceptance 3 7` runs a subset.

#include "commands.hpp"
#include "fixtures.hpp"

#include "varorbit/scenario.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

using namespace fixtures;
using namespace varorbit;

namespace {

const std::filesystem::path kScenarios = VARORBIT_SCENARIO_DIR;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  // Records a named check; failures are listed in the detail line.
  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Criterion = std::function<void(Verdict&)>;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Independent oracles ------------------------------------------------------

// Polygon length in a flat chart, with the closing segment to the lifted
// first sample.
double flat_length(const Loop& l, const Vec& periods) {
  double s = 0.0;
  for (int i = 0; i < l.size(); ++i) {
    Eigen::VectorXd b = i + 1 < l.size() ? Eigen::VectorXd(l.samples.col(i + 1)) : Eigen::VectorXd(l.samples.col(0));
    if (i + 1 == l.size() && l.winding.size() > 0)
      for (int r = 0; r < b.size(); ++r) b[r] += l.winding[r] * periods[r];
    s += (b - l.samples.col(i)).norm();
  }
  return s;
}

// Loop-space norm on a flat chart: α² + |ξ₀|² + N Σ |ξ_{i+1} − ξ_i|².
double flat_tangent_norm(const Eigen::MatrixXd& xi, double alpha) {
  const int n = static_cast<int>(xi.cols());
  double s = alpha * alpha + xi.col(0).squaredNorm();
  for (int i = 0; i < n; ++i) s += n * (xi.col((i + 1) % n) - xi.col(i)).squaredNorm();
  return std::sqrt(s);
}

// Normal of the best-fit plane through the origin and the largest distance
// of a sample from it.
double plane_deviation(const Loop& l) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(l.samples.transpose(), Eigen::ComputeThinV);
  const Eigen::Vector3d n = svd.matrixV().col(2);
  return (n.transpose() * l.samples).cwiseAbs().maxCoeff();
}

// Criteria -----------------------------------------------------------------

void cyclotron_oracle(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario s = load_scenario(kScenarios / "magplane.toml");
  const double k = 0.5, B = s.resolved_parameters.at("B");
  const MinimaxResult r = mountain_pass(cli::mountain_pass_problem(s, k, s.seed), s.minimax_options());
  const double elapsed = seconds_since(t0);
  const Loop& l = r.argmax;
  const Eigen::VectorXd c = l.samples.rowwise().mean();
  const Eigen::ArrayXd radii = (l.samples.colwise() - c).colwise().norm().array();
  const double rho = std::sqrt(2 * k) / B, T = 2 * kPi / B, S = 2 * kPi * k / B;
  v.detail << "radius in [" << radii.minCoeff() << ", " << radii.maxCoeff() << "], T " << l.period << ", S "
           << r.level << ", " << elapsed << " s";
  v.check(r.converged, "converged");
  v.check(std::abs(radii.minCoeff() - rho) <= 1e-3 && std::abs(radii.maxCoeff() - rho) <= 1e-3, "radius");
  v.check(std::abs(l.period - T) <= 1e-3, "period");
  v.check(std::abs(r.level - S) <= 1e-3, "action");
  v.check(r.certificate && r.certificate->pass && r.certificate->el_residual < 1e-3 &&
              r.certificate->energy_dev < 1e-3 && r.certificate->closure_err < 1e-3,
          "certificate");
  v.check(elapsed < 60.0, "runtime");
}

ClassMinOptions class_options(const Scenario& s) {
  ClassMinOptions o;
  o.starts = s.class_starts;
  o.chunks = s.class_chunks;
  o.chunk_time = s.class_chunk_time;
  o.drift_box = s.drift_box;
  o.refine_n = s.refine_n;
  o.seed = s.seed;
  o.certificate = s.tolerances;
  return o;
}

void torus_class(Verdict& v) {
  const Scenario s = load_scenario(kScenarios / "torus_flat.toml");
  const double k = 0.5;
  const Eigen::VectorXi a = cli::parse_class(*s.manifold, "1,0");
  const MinimaxResult r = class_minimize(s.L(), k, a, s.class_seed_loop(a), class_options(s));
  // Shortest loop in the class is a unit segment; at speed √(2k) its period
  // is ℓ/√(2k) and S_k = √(2k)·ℓ.
  const double len = flat_length(r.argmax, s.manifold->periods());
  const double T = 1.0 / std::sqrt(2 * k), S = std::sqrt(2 * k) * 1.0;
  v.detail << "length " << len << ", T " << r.argmax.period << ", S " << r.level;
  v.check(r.converged, "converged");
  v.check(std::abs(len - 1.0) <= 1e-6, "length");
  v.check(std::abs(r.argmax.period - T) <= 1e-6, "period");
  v.check(std::abs(r.level - S) <= 1e-6, "action");
}

void cylinder_geodesic(Verdict& v) {
  const Scenario s = load_scenario(kScenarios / "cylinder.toml");
  const Eigen::VectorXi a = cli::parse_class(*s.manifold, "1");
  const MinimaxResult r = class_minimize(s.L(), 0.5, a, s.class_seed_loop(a), class_options(s));
  const double rmax = r.argmax.samples.row(0).cwiseAbs().maxCoeff();
  // The waist r = 0 has circumference 2π·√β(0) = 2π.
  const double len = length(*s.manifold, r.argmax);
  const double res = r.certificate ? r.certificate->el_residual : 1e300;
  v.detail << "max |r| " << rmax << ", length " << len << ", residual " << res;
  v.check(r.converged, "converged");
  v.check(rmax <= 1e-3, "waist");
  v.check(std::abs(len - 2 * kPi) <= 1e-3, "length");
  v.check(res < 1e-4, "residual");
}

void exp_cylinder_drift(Verdict& v) {
  const Scenario s = load_scenario(kScenarios / "cylinder_exp.toml");
  const Eigen::VectorXi a = cli::parse_class(*s.manifold, "1");
  const MinimaxResult r = class_minimize(s.L(), 0.5, a, s.class_seed_loop(a), class_options(s));
  v.check(!r.converged, "not converged");
  v.check(!r.certificate, "no certificate");
  v.check(r.drift.has_value(), "drift report");
  if (!r.drift) return;
  const DriftReport& d = *r.drift;
  bool decreasing = d.mean.size() >= 2;
  for (std::size_t i = 1; i < d.mean.size(); ++i) decreasing = decreasing && d.mean[i] < d.mean[i - 1];
  v.detail << "r mean " << d.mean.front() << " -> " << d.mean.back() << " over " << d.mean.size() - 1
           << " chunks, min r " << d.extreme.back();
  v.check(d.coordinate == 0 && d.side == -1, "r decreases");
  v.check(d.monotone && decreasing, "monotone");
  v.check(d.extreme.back() < -5.0, "past -5");
}

void sphere_sweepout(Verdict& v) {
  const Scenario s = load_scenario(kScenarios / "sphere.toml");
  const double k = *s.k;
  const PathOfLoops sweep = latitude_sweepout(s.L(), k, s.nodes, s.n, s.pole_period, s.sweep_axis, s.sweep_wobble);
  const MinimaxResult r = sweepout_minimax(s.L(), k, sweep, 0.0, s.minimax_options());
  const double len = length(*s.manifold, r.argmax);
  const double flat = plane_deviation(r.argmax);
  v.detail << "length " << len << ", plane deviation " << flat << ", d(k) " << r.level << " >= bound "
           << r.level_bound;
  v.check(r.converged, "converged");
  v.check(std::abs(len - 2 * kPi) <= 1e-2, "length");
  v.check(flat <= 1e-2, "great circle");
  v.check(r.level > 0.0 && r.level_bound > 0.0, "d(k) > 0");
  v.check(r.certificate && r.certificate->pass, "certificate");
}

void struwe(Verdict& v) {
  const Scenario s = load_scenario(kScenarios / "magplane.toml");
  const double B = s.resolved_parameters.at("B");
  const StruweScan sc = struwe_scan([&](double k) { return cli::mountain_pass_problem(s, k, s.seed); }, 0.2, 1.0, 9,
                                    s.minimax_options());
  double worst = 0.0;
  bool periods = true;
  for (const StruweRow& row : sc.rows) {
    worst = std::max(worst, std::abs(row.level - 2 * kPi * row.k / B));
    if (row.refined && !(row.period <= sc.D + 2 + sc.tau)) periods = false;
  }
  bool monotone = true;
  for (std::size_t i = 1; i < sc.rows.size(); ++i)
    monotone = monotone && sc.rows[i].level >= sc.rows[i - 1].level - 1e-8;
  v.detail << sc.rows.size() << " points, max |c(k) - 2 pi k/B| " << worst << ", D " << sc.D;
  v.check(sc.rows.size() == 9, "9 points");
  v.check(monotone && sc.monotone, "monotone");
  v.check(worst <= 1e-3, "2 pi k");
  v.check(periods, "period bound");
}

void lemma_path_speed(Verdict& v) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> uni(0.05, 1.0);
  std::normal_distribution<double> nd;
  const double c = std::sqrt(1 + 2 * std::sqrt(6.0));
  const std::vector<ManifoldPtr> ms{plane(), torus(),
                                    std::make_shared<Manifold>(Manifold::flat(3, vec({0, 1, 2})))};
  int violations = 0, paths = 0, speed_mismatch = 0;
  const double deltas[] = {0.01, 0.1, 1.0};
  for (int p = 0; p < 1000; ++p) {
    const double delta = deltas[p % 3];
    const auto& m = ms[static_cast<std::size_t>(p / 3) % ms.size()];
    Eigen::VectorXi w = Eigen::VectorXi::Zero(m->coord_dim());
    for (int r = 0; r < w.size(); ++r)
      if (m->periods()[r] > 0) w[r] = static_cast<int>(rng() % 3) - 1;
    PathOfLoops path;
    path.nodes.push_back(random_loop(rng, *m, 8 + 8 * (p % 4), 0.5 + 2 * uni(rng), w));
    const int segs = 1 + p % 9;
    for (int sgm = 0; sgm < segs; ++sgm) {
      const Loop& a = path.nodes.back();
      Eigen::MatrixXd xi(a.coord_dim(), a.size());
      for (int i = 0; i < xi.size(); ++i) xi.data()[i] = nd(rng);
      double alpha = nd(rng);
      // Segment speed = norm · segs ≤ δ.
      const double scale = uni(rng) * delta / segs / flat_tangent_norm(xi, alpha);
      Loop b = a;
      b.samples += scale * xi;
      b.period += scale * alpha;
      if (b.period <= 0) continue;
      path.nodes.push_back(b);
    }
    if (path.nodes.size() < 2) continue;
    const double oracle = [&] {
      double sp = 0.0;
      const double ds = 1.0 / static_cast<double>(path.nodes.size() - 1);
      for (std::size_t j = 0; j + 1 < path.nodes.size(); ++j)
        sp = std::max(sp, flat_tangent_norm(path.nodes[j + 1].samples - path.nodes[j].samples,
                                            path.nodes[j + 1].period - path.nodes[j].period) /
                              ds);
      return sp;
    }();
    const double speed = path_speed(*m, path);
    if (std::abs(speed - oracle) > 1e-10 * std::max(1.0, oracle)) ++speed_mismatch;
    if (speed > delta * (1 + 1e-12)) ++violations;
    const auto& x0 = path.nodes.front();
    const auto& x1 = path.nodes.back();
    if (loop_set_distance(*m, x0, x1) > c * delta + 1e-12) ++violations;
    if (std::abs(x1.period - x0.period) > delta + 1e-12) ++violations;
    ++paths;
  }
  v.detail << paths << " paths, " << violations << " violations, path_speed vs oracle mismatches " << speed_mismatch;
  v.check(paths >= 990, "path count");
  v.check(violations == 0, "bound");
  v.check(speed_mismatch == 0, "speed oracle");
}

void shrinking(Verdict& v) {
  // Warped product ℝ×S¹ with β(r) = 1 + r², pure kinetic.
  const Lagrangian L = kinetic(cylinder());
  const ShrinkMap s = build_radial_shrink(L.manifold(), 1.0, 2.0, 4.0, 0.5);
  const ShrinkReport rep = verify_shrink_inequality(s, L, 10000, 5.0, 99);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  Eigen::VectorXi w(2);
  w << 0, 1;
  int violations = 0, moved = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const double c0 = 2 * u(rng), a1 = u(rng), b1 = u(rng), a2 = 0.5 * u(rng), wob = 0.3 * u(rng);
    const Loop loop = sample_loop(
        [&](double t) {
          const double ph = 2 * kPi * t;
          return vec({c0 + a1 * std::cos(ph) + b1 * std::sin(ph) + a2 * std::cos(2 * ph), ph + wob * std::sin(ph)});
        },
        0.5 + 3 * (u(rng) + 1), 64, w);
    const Loop p = pushback(s, loop);
    if ((p.samples - loop.samples).norm() > 0) ++moved;
    if (action(L, 0.5, p) > action(L, 0.5, loop)) ++violations;
  }
  v.detail << rep.samples << " samples, max violation " << rep.max_violation << "; 100 loops (" << moved
           << " moved), " << violations << " action increases";
  v.check(rep.samples == 10000, "sample count");
  v.check(rep.max_violation <= 0.0, "inequality");
  v.check(violations == 0, "pushback");
  v.check(moved > 0, "collar reached");
}

void barrier_property(Verdict& v) {
  const Scenario s = load_scenario(kScenarios / "magplane.toml");
  const double k = 0.5;
  const Box K = *s.barrier_box;
  const BarrierEstimate b = barrier(s.L(), k, K, s.cover);
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> nd;
  const int n = 64, nodes = 65;
  int violations = 0;
  double lowest = 1e300;
  for (int trial = 0; trial < 100; ++trial) {
    // Negative loop: a clockwise circle of radius ρ > 2√(2k)/B, with a wiggle,
    // at its optimal period; S_k = √(2k)ℓ − Bπρ² for the circle.
    const double rho = 2.3 + 0.7 * u(rng);
    const Vec center = vec({(u(rng) - 0.5) * (8 - 2 * rho - 1), (u(rng) - 0.5) * (8 - 2 * rho - 1)});
    Loop neg = circle_loop(center, rho, 0, 1, -1, 1.0, n);
    const double wig = 0.05 * u(rng);
    for (int i = 0; i < n; ++i) neg.samples(0, i) += wig * std::cos(4 * kPi * i / n);
    neg.period = optimize_period(s.L(), k, neg).period;
    if (!(action(s.L(), k, neg) < 0)) {
      ++violations;
      continue;
    }
    // Path from a random constant loop, with a random bump in the middle.
    const Vec x0 = vec({K.lo[0] + 1 + 6 * u(rng), K.lo[1] + 1 + 6 * u(rng)});
    const double T0 = neg.period * (0.05 + 0.95 * u(rng));
    Eigen::MatrixXd bump(2, n);
    for (int r = 0; r < 2; ++r)
      for (int i = 0; i < n; ++i)
        bump(r, i) = 0.1 * nd(rng) * std::cos(2 * kPi * i / n) + 0.1 * nd(rng) * std::sin(2 * kPi * i / n);
    double top = -1e300;
    for (int j = 0; j < nodes; ++j) {
      const double t = static_cast<double>(j) / (nodes - 1);
      Loop l = neg;
      for (int i = 0; i < n; ++i) l.samples.col(i) = (1 - t) * x0 + t * neg.samples.col(i);
      l.samples += std::sin(kPi * t) * bump;
      l.period = std::exp((1 - t) * std::log(T0) + t * std::log(neg.period));
      top = std::max(top, action(s.L(), k, l));
    }
    lowest = std::min(lowest, top);
    if (!(top > b.a)) ++violations;
  }
  v.detail << "a = " << b.a << " (r " << b.r << ", mu " << b.mu << "), lowest path max " << lowest << ", "
           << violations << " violations";
  v.check(b.a > 0.0, "a > 0");
  v.check(violations == 0, "barrier");
}

void gradient(Verdict& v) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> nd;
  ScalarField V;
  V.value = [](const Vec& x) { return 0.3 * std::cos(x[0]) * std::sin(x[1]); };
  V.gradient = [](const Vec& x) {
    return vec({-0.3 * std::sin(x[0]) * std::sin(x[1]), 0.3 * std::cos(x[0]) * std::cos(x[1])});
  };
  Eigen::VectorXi w01(2), w10(2);
  w01 << 0, 1;
  w10 << 1, 0;
  const std::vector<std::pair<Lagrangian, Eigen::VectorXi>> cases{{magnetic_plane(1.0), {}},
                                                                  {torus_potential(), w10},
                                                                  {Lagrangian(cylinder(), {}, V), w01},
                                                                  {kinetic(sphere()), {}},
                                                                  {magnetic_plane(1.0).with_cap({1.0, 0.5}), {}}};
  double worst = 0.0, worst_riesz = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto& [L, w] = cases[static_cast<std::size_t>(trial) % cases.size()];
    const Manifold& m = L.manifold();
    const Loop loop = random_loop(rng, m, 16 + (trial % 3) * 8, 1.0 + (trial % 7) * 0.4, w);
    LoopTangent t = LoopTangent::zero(loop.coord_dim(), loop.size());
    for (int i = 0; i < loop.size(); ++i) {
      for (int r = 0; r < loop.coord_dim(); ++r) t.xi(r, i) = nd(rng);
      if (!m.is_chart()) t.xi.col(i) = m.tangent_projection(loop.point(i)) * Vec(t.xi.col(i));
    }
    t.alpha = nd(rng);
    const ActionDifferential d = differential(L, 0.5, loop);
    const double eps = 1e-6;
    Loop p = loop, q = loop;
    p.samples += eps * t.xi;
    q.samples -= eps * t.xi;
    p.period += eps * t.alpha;
    q.period -= eps * t.alpha;
    const double fd = (action(L, 0.5, p) - action(L, 0.5, q)) / (2 * eps);
    const double exact = d.dS.apply(t);
    worst = std::max(worst, std::abs(exact - fd) / std::max(1.0, std::abs(exact)));
    RieszSolver solver(L.manifold_ptr());
    solver.factorize(loop);
    const LoopTangent g = solver.solve(d.dS);
    const double gg = solver.inner(g, g);
    worst_riesz = std::max(worst_riesz, std::abs(gg - d.dS.apply(g)) / std::max(gg, 1e-300));
  }
  v.detail << "1000 trials, max relative error " << worst << ", Riesz identity " << worst_riesz;
  v.check(worst < 1e-5, "directional derivative");
  v.check(worst_riesz <= 1e-10, "riesz identity");
}

void cu_brackets(Verdict& v) {
  auto run = [](const char* file, double lo, double hi) {
    const Scenario s = load_scenario(kScenarios / file);
    SearchBudget b;
    b.n = s.n;
    b.seed = s.seed;
    return std::make_pair(varorbit::estimate_cu(s.L(), *s.search_region, lo, hi, s.cu_tol, b), s.cu_tol);
  };
  const auto [kin, tol] = run("plane_kinetic.toml", -1.0, 1.0);
  const auto [tor, tol2] = run("torus_potential.toml", 0.0, 2.0);
  const auto [mag, tol3] = run("magplane.toml", 0.0, 10.0);
  // For V = −cos(2πx₁) without a magnetic term, c_u = max_x (−V) = 1.
  double e0 = -1e300;
  for (int i = 0; i <= 1000; ++i) e0 = std::max(e0, std::cos(2 * kPi * i / 1000.0));
  v.detail << "kinetic [" << kin.lo << ", " << kin.hi << "], torus " << tor.value << " (oracle " << e0
           << "), magnetic plane " << (mag.unbounded_suspected ? "unbounded" : "bounded");
  v.check(kin.lo >= -tol && kin.hi <= tol && kin.lo <= 0.0 && 0.0 <= kin.hi, "kinetic");
  v.check(std::abs(tor.value - e0) <= 0.05, "torus");
  v.check(mag.unbounded_suspected, "magnetic plane");
  (void)tol2;
  (void)tol3;
}

void integrator(Verdict& v) {
  const Lagrangian M = magnetic_plane(1.0);
  const Vec x0 = vec({1, 0}), v0 = vec({0, -1});
  const ShootReport r = shoot(M, x0, v0, 2 * kPi);
  const double order = shooting_order(M, x0, v0, 2 * kPi);
  v.detail << "energy drift " << r.energy_drift << ", order " << order;
  v.check(r.energy_drift < 1e-8, "drift");
  v.check(order >= 3.5 && order <= 4.5, "order");
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, Criterion>> criteria{
      {"cyclotron oracle", cyclotron_oracle},
      {"flat torus class geodesic", torus_class},
      {"closed geodesic on the 1 + r^2 cylinder", cylinder_geodesic},
      {"no closed geodesic on the e^{2r} cylinder", exp_cylinder_drift},
      {"sweepout on the round sphere", sphere_sweepout},
      {"struwe scan on the magnetic plane", struwe},
      {"path speed bounds loop distance", lemma_path_speed},
      {"L-shrinking map", shrinking},
      {"mountain-pass barrier", barrier_property},
      {"gradient correctness", gradient},
      {"c_u brackets", cu_brackets},
      {"integrator quality", integrator},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Verdict v;
    v.detail.precision(8);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    if (!v.pass) ++failed;
    std::printf("%s %2d %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first, v.detail.str().c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
