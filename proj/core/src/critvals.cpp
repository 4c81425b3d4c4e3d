#include "varorbit/critvals.hpp"

#include "varorbit/gradientflow.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace varorbit {

namespace {

Loop with_period(Loop l, double T) {
  l.period = T;
  return l;
}

PeriodOptimum golden_period(const Lagrangian& L, double k, const Loop& loop) {
  auto f = [&](double u) { return action(L, k, with_period(loop, std::exp(u))); };
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = std::log(loop.period) - 12.0, b = std::log(loop.period) + 12.0;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 120 && b - a > 1e-12; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  const double u = 0.5 * (a + b);
  return {std::exp(u), f(u), false};
}

}  // namespace

PeriodOptimum optimize_period(const Lagrangian& L, double k, const Loop& loop) {
  validate_loop(L.manifold(), loop);
  if (L.cap()) return golden_period(L, k, loop);
  // S(T) = K/T + F + Q T through three evaluations.
  const double s1 = action(L, k, with_period(loop, 1.0));
  const double s2 = action(L, k, with_period(loop, 2.0));
  const double sh = action(L, k, with_period(loop, 0.5));
  Eigen::Matrix3d A;
  A << 1.0, 1.0, 1.0, 0.5, 1.0, 2.0, 2.0, 1.0, 0.5;
  const Eigen::Vector3d c = A.partialPivLu().solve(Eigen::Vector3d(s1, s2, sh));
  const double K = std::max(c[0], 0.0), F = c[1], Q = c[2];
  PeriodOptimum out;
  if (Q > 0.0 && K > 0.0) {
    out.period = std::sqrt(K / Q);
    out.action = action(L, k, with_period(loop, out.period));
    return out;
  }
  if (Q < 0.0) {
    out.unbounded = true;
    double T = 1.0;
    while (K / T + F + Q * T >= 0.0 && T < 1e12) T *= 2.0;
    out.period = T;
    out.action = action(L, k, with_period(loop, T));
    return out;
  }
  // Constant loop with Q >= 0 or a non-constant loop with Q = 0: no interior optimum.
  out.period = loop.period;
  out.action = action(L, k, loop);
  return out;
}

NegativeLoopSearch find_negative_action_loop(const Lagrangian& L, double k, const Box& region,
                                             const SearchBudget& budget) {
  const Manifold& m = L.manifold();
  if (region.dim() != m.coord_dim()) throw std::invalid_argument("search region dimension mismatch");
  NegativeLoopSearch out;
  out.best_action = std::numeric_limits<double>::infinity();
  auto consider = [&](const Loop& cand, const std::string& src) {
    ++out.evaluations;
    const PeriodOptimum opt = optimize_period(L, k, cand);
    if (opt.action < out.best_action) out.best_action = opt.action;
    if (opt.action < 0.0 && !out.witness) {
      out.witness = with_period(cand, opt.period);
      out.source = src;
    }
    return opt;
  };

  // Constant loops at the top of E(x, 0) = −V(x).
  if (!L.potential().is_zero() || k < 0.0) {
    std::vector<Vec> pts = sample_region(m, region, 9);
    const int d = region.dim();
    for (int i = 1; i <= 256; ++i) {
      Vec p = region.at(halton(i, d));
      pts.push_back(m.is_chart() ? p : m.project(p));
    }
    Vec best = pts.front();
    for (const Vec& p : pts)
      if (L.V(p) < L.V(best)) best = p;
    if (!L.potential().is_zero() && L.potential().gradient) {
      double s = 0.1;
      for (int it = 0; it < 100 && s > 1e-12; ++it) {
        Vec g = L.potential().gradient(best);
        if (!m.is_chart()) g = m.tangent_projection(best) * g;
        Vec trial = region.clamp(Vec(best - s * g));
        if (!m.is_chart()) trial = m.project(trial);
        if (L.V(trial) < L.V(best)) {
          best = trial;
          s *= 1.5;
        } else {
          s *= 0.5;
        }
      }
    }
    const Loop c = constant_loop(best, 1.0, budget.n);
    ++out.evaluations;
    const double S = action(L, k, c);
    out.best_action = std::min(out.best_action, S);
    if (S < 0.0) {
      out.witness = c;
      out.source = "constant";
      return out;
    }
  }

  // Round circles in every coordinate plane of a chart, centres from the middle
  // of the region outwards and radii from small to large.
  if (m.is_chart() && m.coord_dim() >= 2) {
    const int d = m.coord_dim();
    const int per = std::max(1, budget.centers_per_axis);
    const int total = static_cast<int>(std::pow(per, d));
    std::vector<Vec> centers;
    for (int ci = 0; ci < total; ++ci) {
      Vec u(d);
      int idx = ci;
      for (int q = 0; q < d; ++q) {
        u[q] = per == 1 ? 0.5 : static_cast<double>(idx % per) / (per - 1);
        idx /= per;
      }
      centers.push_back(region.at(u));
    }
    const Vec mid = region.center();
    std::stable_sort(centers.begin(), centers.end(),
                     [&](const Vec& p, const Vec& q) { return (p - mid).norm() < (q - mid).norm(); });
    for (int a = 0; a < d && !out.witness; ++a)
      for (int b = a + 1; b < d && !out.witness; ++b) {
        const double rmax = 0.5 * std::min(region.hi[a] - region.lo[a], region.hi[b] - region.lo[b]);
        for (const Vec& center : centers) {
          for (int j = budget.radii - 1; j >= 0 && !out.witness; --j) {
            const double frac = budget.radii == 1 ? 1.0 : std::pow(0.02, static_cast<double>(j) / (budget.radii - 1));
            const double r = rmax * frac;
            for (int o : {-1, 1}) {
              const Loop c = circle_loop(center, r, a, b, o, 1.0, budget.n);
              bool inside = true;
              for (int i = 0; i < c.size() && inside; ++i) inside = region.contains(c.point(i), 1e-12);
              if (!inside) continue;
              consider(c, "circle");
              if (out.witness) break;
            }
          }
          if (out.witness) break;
        }
      }
    if (out.witness) return out;
  }

  // Multi-start descent with period optimization.
  std::mt19937_64 rng(budget.seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  const int d = region.dim();
  const double extent = (region.hi - region.lo).minCoeff();
  for (int s = 0; s < budget.descent_starts && !out.witness; ++s) {
    const Vec center = region.at(Vec(0.25 * Vec::Ones(d) + 0.5 * halton(s + 1, d)));
    Eigen::MatrixXd coef = Eigen::MatrixXd::Zero(d, 6);
    for (int q = 0; q < d; ++q)
      for (int j = 0; j < 6; ++j) coef(q, j) = nd(rng) / (1 + j / 2);
    auto f = [&](double t) {
      Vec p = center;
      for (int j = 0; j < 3; ++j) {
        const double w = 2 * std::numbers::pi * (j + 1) * t;
        for (int q = 0; q < d; ++q) p[q] += 0.15 * extent * (coef(q, 2 * j) * std::cos(w) + coef(q, 2 * j + 1) * std::sin(w));
      }
      return m.is_chart() ? p : m.project(p);
    };
    Loop loop = sample_loop(f, 1.0, budget.n, m.is_chart() ? Eigen::VectorXi::Zero(d) : Eigen::VectorXi());
    bool inside = true;
    for (int i = 0; i < loop.size() && inside; ++i) inside = region.contains(loop.point(i));
    if (!inside) continue;
    const PeriodOptimum opt = consider(loop, "descent");
    if (out.witness) break;
    loop.period = opt.period;
    FlowConfig cfg;
    cfg.confinement = region;
    try {
      const FlowResult r = evolve(cfg, L, k, loop, budget.descent_time);
      consider(r.loop, "descent");
    } catch (const std::runtime_error&) {
      // A stalled or degenerate descent is just a failed start.
    }
  }
  return out;
}

CriticalValueEstimate estimate_cu(const Lagrangian& L, const Box& region, double k_lo, double k_hi, double tol,
                                  const SearchBudget& budget) {
  if (!std::isfinite(k_lo) || !std::isfinite(k_hi) || !(k_lo < k_hi))
    throw std::invalid_argument("estimate_cu needs a finite bracket k_lo < k_hi");
  if (!(tol > 0.0)) throw std::invalid_argument("estimate_cu tolerance must be positive");
  CriticalValueEstimate est;
  auto log = [&](const std::string& s) { est.log.push_back(s); };

  // A witness at k stays a witness at every k' < k, so earlier loops are tried first.
  auto search = [&](double k) -> bool {
    for (const CuWitness& w : est.witnesses) {
      const PeriodOptimum opt = optimize_period(L, k, w.loop);
      ++est.evaluations;
      if (opt.action < 0.0) {
        est.witnesses.push_back({k, with_period(w.loop, opt.period), opt.action});
        std::ostringstream os;
        os << "k = " << k << ": witness reused, S = " << opt.action;
        log(os.str());
        return true;
      }
    }
    const NegativeLoopSearch r = find_negative_action_loop(L, k, region, budget);
    est.evaluations += r.evaluations;
    std::ostringstream os;
    if (r.witness) {
      const double S = action(L, k, *r.witness);
      est.witnesses.push_back({k, *r.witness, S});
      os << "k = " << k << ": " << r.source << " witness, S = " << S;
      log(os.str());
      return true;
    }
    est.failures.push_back(k);
    os << "k = " << k << ": no witness, best S = " << r.best_action;
    log(os.str());
    return false;
  };

  if (search(k_hi)) {
    est.lo = est.hi = est.value = k_hi;
    est.unbounded_suspected = true;
    log("witness at the top of the bracket: c_u may be unbounded");
    return est;
  }
  if (!search(k_lo)) {
    est.lo = est.hi = est.value = k_lo;
    est.below_bracket = true;
    log("no witness at the bottom of the bracket");
    return est;
  }
  double lo = k_lo, hi = k_hi;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (search(mid)) lo = mid;
    else hi = mid;
  }
  est.lo = lo;
  est.hi = hi;
  est.value = 0.5 * (lo + hi);
  return est;
}

double flux(const Manifold& m, const OneForm& theta, const Loop& loop) {
  if (theta.is_zero()) return 0.0;
  double s = 0.0;
  for (int i = 0; i < loop.size(); ++i) {
    const Vec a = loop.point(i);
    const Vec d = segment(m, loop, i);
    s += theta.value(Vec(a + 0.5 * d)).dot(d);
  }
  return s;
}

namespace {

Mat exterior_derivative(const OneForm& theta, const Vec& x) {
  Mat J;
  if (theta.jacobian) {
    J = theta.jacobian(x);
  } else {
    const int d = static_cast<int>(x.size());
    J.resize(d, d);
    const double h = 1e-6;
    for (int i = 0; i < d; ++i) {
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      J.row(i) = ((theta.value(xp) - theta.value(xm)) / (2 * h)).transpose();
    }
  }
  return J - J.transpose();
}

}  // namespace

double estimate_mu(const Manifold& m, const OneForm& theta, const ChartBall& ball, int checks, std::uint64_t seed) {
  constexpr double kFloor = 1e-12;
  if (!m.is_chart()) throw GeometryError("estimate_mu needs a chart ball");
  const int d = m.coord_dim();
  if (ball.center.size() != d || !(ball.radius > 0.0)) throw std::invalid_argument("invalid chart ball");
  for (int i = 0; i < d; ++i)
    if (m.periods()[i] > 0.0 && 2.0 * ball.radius >= m.periods()[i])
      throw GeometryError("ball does not fit in the chart along periodic coordinate " + std::to_string(i));

  // Grid and Halton points of the ball.
  std::vector<Vec> pts{ball.center};
  for (int i = 1; i <= 512; ++i) {
    const Vec u = 2.0 * halton(i, d) - Vec::Ones(d);
    if (u.norm() <= 1.0) pts.push_back(ball.center + ball.radius * u);
  }
  const int per = 7;
  const int total = static_cast<int>(std::pow(per, d));
  for (int ci = 0; ci < total; ++ci) {
    Vec u(d);
    int idx = ci;
    for (int q = 0; q < d; ++q) {
      u[q] = -1.0 + 2.0 * (idx % per) / (per - 1);
      idx /= per;
    }
    if (u.norm() <= 1.0) pts.push_back(ball.center + ball.radius * u);
  }

  double supF = 0.0, lmin = std::numeric_limits<double>::infinity();
  for (const Vec& p : pts) {
    Eigen::SelfAdjointEigenSolver<Mat> es(m.metric(p), Eigen::EigenvaluesOnly);
    lmin = std::min(lmin, es.eigenvalues()[0]);
    if (!theta.is_zero()) {
      const Mat F = exterior_derivative(theta, p);
      supF = std::max(supF, Eigen::JacobiSVD<Mat>(F).singularValues()[0]);
    }
  }
  if (!(lmin > 0.0)) throw GeometryError("metric degenerate on the ball");
  const double mu = std::max(0.5 * supF / lmin, kFloor);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  const int n = 64;
  for (int c = 0; c < checks; ++c) {
    Vec dir(d);
    for (int q = 0; q < d; ++q) dir[q] = nd(rng);
    const Vec c0 = ball.center + 0.5 * ball.radius * std::pow(ud(rng), 1.0 / d) * dir.normalized();
    const int modes = 1 + static_cast<int>(ud(rng) * 4);
    Eigen::MatrixXd coef(d, 2 * modes);
    for (int q = 0; q < d; ++q)
      for (int j = 0; j < 2 * modes; ++j) coef(q, j) = nd(rng) / (1 + j / 2);
    auto shape = [&](double t) {
      Vec p = Vec::Zero(d);
      for (int j = 0; j < modes; ++j) {
        const double w = 2 * std::numbers::pi * (j + 1) * t;
        for (int q = 0; q < d; ++q) p[q] += coef(q, 2 * j) * std::cos(w) + coef(q, 2 * j + 1) * std::sin(w);
      }
      return p;
    };
    double zmax = 0.0;
    for (int i = 0; i < n; ++i) zmax = std::max(zmax, shape(static_cast<double>(i) / n).norm());
    const double room = ball.radius - (c0 - ball.center).norm();
    const double scale = room * (0.05 + 0.95 * ud(rng)) / std::max(zmax, 1e-300);
    const Loop loop = sample_loop([&](double t) { return Vec(c0 + scale * shape(t)); }, 1.0, n, Eigen::VectorXi::Zero(d));
    const double phi = flux(m, theta, loop);
    const double ell = length(m, loop);
    if (std::abs(phi) > mu * ell * ell * (1 + 1e-9) + 1e-14) {
      std::ostringstream os;
      os << "isoperimetric check failed: |flux| = " << std::abs(phi) << " > mu l^2 = " << mu * ell * ell;
      throw IsoperimetricViolation(os.str(), loop);
    }
  }
  return mu;
}

}  // namespace varorbit
