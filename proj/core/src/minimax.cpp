#include "varorbit/minimax.hpp"

#include "parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace varorbit {

std::string to_string(FamilyKind f) {
  switch (f) {
    case FamilyKind::MountainPass: return "mountain-pass";
    case FamilyKind::Sweepout: return "sweepout";
    case FamilyKind::ClassMin: return "class-min";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Newton refinement

namespace {

struct Frame {
  bool chart = true;
  int block = 0;
  int n = 0;
  std::vector<Mat> bases;
  int size() const { return block * n + 1; }
};

Frame make_frame(const Manifold& m, const Loop& loop) {
  Frame f;
  f.chart = m.is_chart();
  f.block = f.chart ? m.coord_dim() : m.dim();
  f.n = loop.size();
  if (!f.chart)
    for (int i = 0; i < f.n; ++i) f.bases.push_back(m.tangent_basis(loop.point(i)));
  return f;
}

Loop retract(const Manifold& m, const Frame& f, const Loop& base, const Eigen::VectorXd& du) {
  Loop out = base;
  for (int i = 0; i < f.n; ++i) {
    const Vec step = du.segment(i * f.block, f.block);
    if (f.chart) out.samples.col(i) += step;
    else out.samples.col(i) = m.project(Vec(base.point(i) + f.bases[static_cast<std::size_t>(i)] * step));
  }
  out.period = base.period + du[f.block * f.n];
  return out;
}

// dS_k at the loop in the reduced coordinates of the frame (tangential part,
// expressed in the frame's bases when embedded), period entry last.
Eigen::VectorXd reduced_gradient(const Lagrangian& L, double k, const Frame& f, const Loop& loop) {
  const auto d = differential(L, k, loop);
  Eigen::VectorXd F(f.size());
  const Manifold& m = L.manifold();
  for (int i = 0; i < f.n; ++i) {
    const Vec c = d.dS.position.col(i);
    if (f.chart) F.segment(i * f.block, f.block) = c;
    else F.segment(i * f.block, f.block) = f.bases[static_cast<std::size_t>(i)].transpose() * (m.tangent_projection(loop.point(i)) * c);
  }
  F[f.block * f.n] = d.dS.period;
  return F;
}

Eigen::MatrixXd fd_hessian(const Lagrangian& L, double k, const Frame& f, const Loop& base) {
  const Manifold& m = L.manifold();
  const int n = f.n, c = f.block, size = f.size();
  int q = 3;
  while (n % q != 0) ++q;
  const double eps = 1e-5;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(size, size);
  for (int color = 0; color < q; ++color)
    for (int r = 0; r < c; ++r) {
      Eigen::VectorXd du = Eigen::VectorXd::Zero(size);
      for (int i = color; i < n; i += q) du[i * c + r] = eps;
      const Eigen::VectorXd dF =
          (reduced_gradient(L, k, f, retract(m, f, base, du)) - reduced_gradient(L, k, f, retract(m, f, base, -du))) /
          (2 * eps);
      for (int i = color; i < n; i += q)
        for (int j : {(i + n - 1) % n, i, (i + 1) % n}) H.block(j * c, i * c + r, c, 1) = dF.segment(j * c, c);
    }
  Eigen::VectorXd du = Eigen::VectorXd::Zero(size);
  const double eT = eps * base.period;
  du[size - 1] = eT;
  const Eigen::VectorXd dF =
      (reduced_gradient(L, k, f, retract(m, f, base, du)) - reduced_gradient(L, k, f, retract(m, f, base, -du))) /
      (2 * eT);
  H.col(size - 1) = dF;
  H.row(size - 1) = dF.transpose();
  return 0.5 * (H + H.transpose());
}

double gradient_norm(RieszSolver& solver, const Lagrangian& L, double k, const Loop& loop, double* act = nullptr) {
  const auto d = differential(L, k, loop);
  if (act) *act = d.action;
  solver.factorize(loop);
  return solver.norm(solver.solve(d.dS));
}

}  // namespace

RefineResult refine_critical_point(const Lagrangian& L, double k, const Loop& loop, double gradient_tol,
                                   int max_iterations) {
  const Manifold& m = L.manifold();
  validate_loop(m, loop);
  if (loop.size() < 3) throw MinimaxError("refinement needs at least 3 samples");
  RieszSolver solver(L.manifold_ptr());
  RefineResult res;
  res.loop = loop;
  res.grad_norm = gradient_norm(solver, L, k, res.loop, &res.action);
  for (int it = 0;; ++it) {
    const Frame f = make_frame(m, res.loop);
    solver.factorize(res.loop);
    Eigen::MatrixXd G = Eigen::MatrixXd(solver.matrix());
    G.conservativeResize(f.size(), f.size());
    G.col(f.size() - 1).setZero();
    G.row(f.size() - 1).setZero();
    G(f.size() - 1, f.size() - 1) = 1.0;
    const Eigen::MatrixXd H = fd_hessian(L, k, f, res.loop);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(H, G);
    const Eigen::VectorXd& lam = ges.eigenvalues();
    const double cut = 1e-7 * lam.cwiseAbs().maxCoeff();
    res.morse_index = static_cast<int>((lam.array() < -cut).count());
    res.nullity = static_cast<int>((lam.array().abs() <= cut).count());
    if (res.grad_norm < gradient_tol) {
      res.converged = true;
      break;
    }
    if (it >= max_iterations) break;

    const Eigen::VectorXd F = reduced_gradient(L, k, f, res.loop);
    const Eigen::VectorXd proj = ges.eigenvectors().transpose() * F;
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(lam.size());
    for (int j = 0; j < lam.size(); ++j)
      if (std::abs(lam[j]) > cut) coef[j] = -proj[j] / lam[j];
    const Eigen::VectorXd du = ges.eigenvectors() * coef;

    double s = 1.0;
    while (res.loop.period + s * du[f.size() - 1] < 0.2 * res.loop.period) s *= 0.5;
    bool accepted = false;
    for (int tries = 0; tries < 12; ++tries, s *= 0.5) {
      Loop cand;
      double gn, act;
      try {
        cand = retract(m, f, res.loop, Eigen::VectorXd(s * du));
        gn = gradient_norm(solver, L, k, cand, &act);
      } catch (const std::runtime_error&) {
        continue;
      }
      if (std::isfinite(gn) && gn < res.grad_norm) {
        res.loop = std::move(cand);
        res.grad_norm = gn;
        res.action = act;
        accepted = true;
        break;
      }
    }
    res.iterations = it + 1;
    if (!accepted) break;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Paths

namespace {

Loop interpolate(const Manifold& m, const Loop& a, const Loop& b, double w) {
  Loop out = a;
  out.samples = (1 - w) * a.samples + w * b.samples;
  if (!m.is_chart())
    for (int i = 0; i < out.size(); ++i) out.samples.col(i) = m.project(out.point(i));
  out.period = (1 - w) * a.period + w * b.period;
  return out;
}

bool is_constant(const Loop& l) {
  const double scale = 1e-12 * std::max(1.0, l.samples.cwiseAbs().maxCoeff());
  for (int i = 1; i < l.size(); ++i)
    if ((l.samples.col(i) - l.samples.col(0)).cwiseAbs().maxCoeff() > scale) return false;
  return l.winding.size() == 0 || l.winding.isZero();
}

double excursion_from(const Loop& l, const Vec& x0) {
  return (l.samples.colwise() - Eigen::VectorXd(x0)).colwise().norm().maxCoeff();
}

// Redistributes the interior nodes uniformly in product-metric arc length.
void remesh(const Manifold& m, PathOfLoops& path, int max_nodes) {
  auto& nodes = path.nodes;
  std::vector<double> cum{0.0};
  for (std::size_t j = 0; j + 1 < nodes.size(); ++j)
    cum.push_back(cum.back() + loop_difference_norm(m, nodes[j], nodes[j + 1]));
  const double total = cum.back();
  int M = static_cast<int>(nodes.size());
  if (path.mesh_bound > 0.0)
    M = std::clamp(static_cast<int>(std::ceil(total / path.mesh_bound)) + 1, M, std::max(M, max_nodes));
  if (!(total > 0.0)) return;
  std::vector<Loop> out{nodes.front()};
  std::size_t j = 0;
  for (int q = 1; q < M - 1; ++q) {
    const double s = total * q / (M - 1);
    while (j + 2 < cum.size() && cum[j + 1] < s) ++j;
    const double len = cum[j + 1] - cum[j];
    const double w = len > 0.0 ? std::clamp((s - cum[j]) / len, 0.0, 1.0) : 0.0;
    out.push_back(interpolate(m, nodes[j], nodes[j + 1], w));
  }
  out.push_back(nodes.back());
  nodes = std::move(out);
}

struct StringOutcome {
  int top = 0;
  double level = 0.0;
  double family_length = std::numeric_limits<double>::infinity();
};

int top_node(const std::vector<double>& S, double level_tol) {
  const double top = *std::max_element(S.begin(), S.end());
  for (std::size_t j = 0; j < S.size(); ++j)
    if (S[j] >= top - level_tol) return static_cast<int>(j);
  return 0;
}

// Deformation sweeps of the family: truncated flow on the free nodes, pushback
// into K0, re-mesh. Fills ps, sweeps, pushback counters and the path.
StringOutcome run_string(const Lagrangian& L, double k, const std::optional<ShrinkMap>& shrink, FlowConfig flow,
                         double level_tol, bool fix_last, const MinimaxOptions& opt, MinimaxResult& res) {
  const Manifold& m = L.manifold();
  PathOfLoops& path = res.path;
  const int max_nodes = 4 * static_cast<int>(path.nodes.size());
  const Vec x0 = path.nodes.front().point(0);
  RieszSolver solver(L.manifold_ptr());
  StringOutcome out;
  for (int sweep = 0;; ++sweep) {
    std::vector<double> S;
    double fam_len = 0.0;
    for (const Loop& l : path.nodes) {
      S.push_back(action(L, k, l));
      fam_len = std::max(fam_len, length(m, l));
    }
    out.family_length = std::min(out.family_length, fam_len);
    if (!(S.back() < 0.0) && !fix_last) throw MinimaxError("negative endpoint lost S_k < 0");
    out.top = top_node(S, level_tol);
    out.level = *std::max_element(S.begin(), S.end());
    if (!(out.level > 0.0)) throw MinimaxError("family level is not positive");
    const Loop& top = path.nodes[static_cast<std::size_t>(out.top)];
    const double gn = gradient_norm(solver, L, k, top);
    res.ps.steps.push_back({static_cast<double>(sweep), out.level, gn, top.period, excursion_from(top, x0)});
    res.sweeps = sweep;
    if (gn < opt.string_tol || sweep >= opt.max_sweeps) break;

    flow.kind = FlowKind::Truncated;
    flow.cutoff_low = out.level / 4.0;
    flow.cutoff_high = out.level / 2.0;
    const std::size_t last = path.nodes.size() - (fix_last ? 1 : 0);
    for (std::size_t j = 1; j < last; ++j) {
      try {
        path.nodes[j] = evolve(flow, L, k, path.nodes[j], opt.sweep_time).loop;
      } catch (const FlowStall&) {
        // Keep the node; a stalled step did not increase its action.
      }
    }
    if (shrink) {
      for (std::size_t j = 1; j < path.nodes.size(); ++j) {
        Loop& node = path.nodes[j];
        bool outside = false;
        for (int i = 0; i < node.size(); ++i) {
          if (!shrink->in_K(node.point(i))) {
            std::ostringstream os;
            os << "node " << j << " left K at sample " << i << " (radius " << shrink->radius(node.point(i)) << ")";
            throw MinimaxError(os.str());
          }
          outside = outside || shrink->radius(node.point(i)) > shrink->r0;
        }
        if (!outside) continue;
        const Loop pb = pushback(*shrink, node);
        const double before = action(L, k, node), after = action(L, k, pb);
        ++res.pushbacks;
        if (after > before + 1e-12 * std::max(1.0, std::abs(before))) {
          ++res.pushback_violations;
          std::ostringstream os;
          os << "pushback raised the action of node " << j << " from " << before << " to " << after;
          res.log.push_back(os.str());
        } else {
          node = pb;
        }
      }
    }
    remesh(m, path, max_nodes);
  }
  return out;
}

// Ascent along the family tangent, descent in all other directions.
Loop climb(const Lagrangian& L, double k, const PathOfLoops& path, int top, const MinimaxOptions& opt) {
  const Manifold& m = L.manifold();
  const int M = static_cast<int>(path.nodes.size());
  const Loop& prev = path.nodes[static_cast<std::size_t>(std::max(top - 1, 0))];
  const Loop& next = path.nodes[static_cast<std::size_t>(std::min(top + 1, M - 1))];
  const LoopTangent dir{next.samples - prev.samples, next.period - prev.period};
  RieszSolver solver(L.manifold_ptr());
  Loop cur = path.nodes[static_cast<std::size_t>(top)];
  Loop best = cur;
  double best_gn = std::numeric_limits<double>::infinity();
  int worse = 0;
  for (int s = 0; s < opt.climb_steps; ++s) {
    const auto d = differential(L, k, cur);
    solver.factorize(cur);
    const LoopTangent g = solver.solve(d.dS);
    const double gn = solver.norm(g);
    if (gn < best_gn) {
      best_gn = gn;
      best = cur;
      worse = 0;
    } else if (++worse > 10) {
      break;
    }
    LoopTangent t = solver.expand(solver.reduce(dir), dir.alpha);
    const double tn = solver.norm(t);
    if (!(tn > 0.0)) break;
    t = t * (1.0 / tn);
    const LoopTangent v = g * -1.0 + t * (2.0 * solver.inner(g, t));
    cur = advance(m, cur, v, opt.climb_step / std::max(1.0, gn));
  }
  return best;
}

void polish(const Lagrangian& L, double k, const Loop& start, double gradient_tol, double level_tol,
            OrbitMethod method, const MinimaxOptions& opt, MinimaxResult& res) {
  const Manifold& m = L.manifold();
  RefineResult r = refine_critical_point(L, k, start, gradient_tol, opt.newton_iterations);
  if (opt.refine_n != start.size()) {
    std::ostringstream os;
    os << "coarse refinement at N = " << start.size() << ": |dS| = " << r.grad_norm << " after " << r.iterations
       << " Newton steps";
    res.log.push_back(os.str());
    r = refine_critical_point(L, k, resample(m, r.loop, opt.refine_n), gradient_tol, opt.newton_iterations);
  }
  res.argmax = r.loop;
  res.level = r.action;
  res.morse_index = r.morse_index;
  res.nullity = r.nullity;
  {
    std::ostringstream os;
    os << "refined at N = " << r.loop.size() << ": S = " << r.action << ", |dS| = " << r.grad_norm << ", T = "
       << r.loop.period << ", index " << r.morse_index << ", nullity " << r.nullity;
    res.log.push_back(os.str());
  }
  const double t_next = res.ps.steps.empty() ? 0.0 : res.ps.steps.back().time + 1.0;
  const double exc = res.ps.steps.empty() ? 0.0 : res.ps.steps.back().excursion;
  res.ps.steps.push_back({t_next, r.action, r.grad_norm, r.loop.period, exc});
  res.ps.verdict = r.converged ? PSVerdict::Converged : PSVerdict::Budget;
  res.classification = ps_classify(res.ps, opt.period_min, opt.period_max, gradient_tol, level_tol);
  res.converged = r.converged && res.classification.verdict == PSVerdict::Converged;
  if (!(res.level > 0.0) && method != OrbitMethod::ClassMin) {
    res.converged = false;
    res.log.push_back("refined level is not positive");
  }
  if (res.converged && opt.certify) res.certificate = certify(L, k, res.argmax, method, opt.certificate);
}

}  // namespace

PathOfLoops straight_family(const Manifold& m, const Loop& from, const Loop& to, int nodes) {
  if (nodes < 2) throw MinimaxError("a family needs at least two nodes");
  if (from.size() != to.size()) throw MinimaxError("family endpoints must share N");
  Loop a = from;
  a.winding = to.winding;
  PathOfLoops p;
  for (int j = 0; j < nodes; ++j) p.nodes.push_back(interpolate(m, a, to, static_cast<double>(j) / (nodes - 1)));
  p.nodes.back() = to;
  return p;
}

PathOfLoops contraction_family(const Manifold& m, const Loop& negative, double T0, int nodes) {
  if (negative.winding.size() > 0 && !negative.winding.isZero())
    throw MinimaxError("a mountain-pass family needs a contractible loop");
  Vec c = negative.samples.rowwise().mean();
  if (!m.is_chart()) c = m.project(c);
  Loop from = constant_loop(c, T0, negative.size());
  return straight_family(m, from, negative, nodes);
}

void MountainPassProblem::validate() const {
  const Manifold& m = L.manifold();
  const auto& nodes = family.nodes;
  if (nodes.size() < 3) throw MinimaxError("mountain-pass family needs at least three nodes");
  if (!std::isfinite(k)) throw MinimaxError("energy must be finite");
  for (const Loop& l : nodes) {
    validate_loop(m, l);
    if (l.size() != nodes.front().size() || l.winding != nodes.back().winding)
      throw MinimaxError("family nodes must share N and winding");
  }
  if (!is_constant(nodes.front())) throw MinimaxError("p(0) must be a constant loop");
  const double s_end = action(L, k, nodes.back());
  if (!(s_end < 0.0)) {
    std::ostringstream os;
    os << "S_k(p(last)) = " << s_end << " is not negative: no mountain-pass family";
    throw MinimaxError(os.str());
  }
  if (confinement)
    for (std::size_t j = 0; j < nodes.size(); ++j)
      for (int i = 0; i < nodes[j].size(); ++i)
        if (!confinement->in_K(nodes[j].point(i)))
          throw MinimaxError("family node " + std::to_string(j) + " is not in K");
  flow.validate();
}

MinimaxResult mountain_pass(const MountainPassProblem& p, const MinimaxOptions& opt) {
  p.validate();
  MinimaxResult res;
  res.family_kind = FamilyKind::MountainPass;
  res.k = p.k;
  res.path = p.family;
  const StringOutcome s = run_string(p.L, p.k, p.confinement, p.flow, p.level_tol, false, opt, res);
  res.string_level = s.level;
  const Loop start = climb(p.L, p.k, res.path, s.top, opt);
  polish(p.L, p.k, start, p.gradient_tol, p.level_tol, OrbitMethod::MountainPass, opt, res);
  return res;
}

// ---------------------------------------------------------------------------
// Struwe scan

StruweScan struwe_scan(const std::function<MountainPassProblem(double)>& make_problem, double k_min, double k_max,
                       int grid_size, const MinimaxOptions& opt, int jobs) {
  if (grid_size < 3) throw MinimaxError("struwe scan needs at least three grid points");
  if (!(k_min < k_max)) throw MinimaxError("struwe scan needs k_min < k_max");
  StruweScan scan;
  scan.rows.resize(static_cast<std::size_t>(grid_size));
  std::vector<double> tols(static_cast<std::size_t>(grid_size));
  detail::parallel_for(grid_size, jobs, [&](int i) {
    const double k = k_min + (k_max - k_min) * i / (grid_size - 1);
    const MountainPassProblem p = make_problem(k);
    StruweRow& row = scan.rows[static_cast<std::size_t>(i)];
    row.k = k;
    row.result = mountain_pass(p, opt);
    row.level = row.result.level;
    row.period = row.result.argmax.period;
    tols[static_cast<std::size_t>(i)] = p.gradient_tol;
    if (i == 0) scan.tau = p.flow.tau;
  });
  std::vector<double> q;
  for (int i = 0; i < grid_size; ++i) {
    const int a = i + 1 < grid_size ? i : i - 1;
    auto& ra = scan.rows[static_cast<std::size_t>(a)];
    auto& rb = scan.rows[static_cast<std::size_t>(a + 1)];
    scan.rows[static_cast<std::size_t>(i)].quotient = (rb.level - ra.level) / (rb.k - ra.k);
    q.push_back(std::abs(scan.rows[static_cast<std::size_t>(i)].quotient));
  }
  std::nth_element(q.begin(), q.begin() + grid_size / 2, q.end());
  double med = q[static_cast<std::size_t>(grid_size / 2)];
  if (grid_size % 2 == 0) {
    const double lower = *std::max_element(q.begin(), q.begin() + grid_size / 2);
    med = 0.5 * (med + lower);
  }
  scan.D = 2.0 * med;
  scan.D2 = scan.D + 2.0;
  for (int i = 0; i < grid_size; ++i) {
    StruweRow& row = scan.rows[static_cast<std::size_t>(i)];
    if (i + 1 < grid_size) {
      const double drop = row.level - scan.rows[static_cast<std::size_t>(i + 1)].level;
      scan.max_drop = std::max(scan.max_drop, drop);
      if (drop > 1e-8) scan.monotone = false;
    }
    if (row.quotient < scan.D) {
      row.refined = true;
      const PSClassification c =
          ps_classify(row.result.ps, opt.period_min, scan.D2, tols[static_cast<std::size_t>(i)]);
      row.converged = c.verdict == PSVerdict::Converged && row.result.converged;
      row.pass = row.converged && row.result.certificate && row.result.certificate->pass &&
                 row.period <= scan.D2 + scan.tau;
    } else {
      row.converged = row.result.converged;
      row.pass = row.converged && row.result.certificate && row.result.certificate->pass;
    }
  }
  return scan;
}

// ---------------------------------------------------------------------------
// Barrier

BarrierEstimate barrier_from_constants(double A1, double e0, double mu, double delta, double k) {
  if (!(k > e0)) {
    std::ostringstream os;
    os << "barrier needs k > e0 (k = " << k << ", e0 = " << e0 << ")";
    throw MinimaxError(os.str());
  }
  if (!(A1 > 0.0) || !(delta > 0.0)) throw MinimaxError("barrier needs A1 > 0 and a positive Lebesgue number");
  BarrierEstimate b;
  b.A1 = A1;
  b.e0 = e0;
  b.mu = b.mu_min = b.mu_max = std::max(mu, 1e-12);
  b.lebesgue_delta = delta;
  b.d = std::min(delta, std::sqrt(A1 * (k - e0)) / (std::sqrt(2.0) * b.mu));
  b.r = b.d;
  b.a = std::sqrt(2 * A1 * (k - e0)) * b.r - b.mu * b.r * b.r;
  return b;
}

BarrierEstimate barrier(const Lagrangian& L, double k, const Box& K, const BallCover& cover, int mu_checks) {
  const Manifold& m = L.manifold();
  if (!m.is_chart()) throw MinimaxError("barrier covers are chart boxes");
  const int d = K.dim();
  if (d != m.coord_dim()) throw MinimaxError("box dimension mismatch");
  if (!(cover.spacing > 0.0)) throw MinimaxError("cover spacing must be positive");
  std::vector<int> per(static_cast<std::size_t>(d));
  double half_diag2 = 0.0;
  int total = 1;
  for (int q = 0; q < d; ++q) {
    const double ext = K.hi[q] - K.lo[q];
    const int cnt = ext > 0 ? static_cast<int>(std::ceil(ext / cover.spacing)) + 1 : 1;
    per[static_cast<std::size_t>(q)] = cnt;
    const double s = cnt > 1 ? ext / (cnt - 1) : 0.0;
    half_diag2 += 0.25 * s * s;
    total *= cnt;
  }
  const double reach = cover.radius - std::sqrt(half_diag2);
  if (!(reach > 0.0)) throw MinimaxError("balls of this radius do not cover the box at this spacing");

  double mu_min = std::numeric_limits<double>::infinity(), mu_max = 0.0;
  for (int ci = 0; ci < total; ++ci) {
    Vec c(d);
    int idx = ci;
    for (int q = 0; q < d; ++q) {
      const int cnt = per[static_cast<std::size_t>(q)];
      c[q] = cnt > 1 ? K.lo[q] + (K.hi[q] - K.lo[q]) * (idx % cnt) / (cnt - 1) : K.center()[q];
      idx /= cnt;
    }
    const double mu = estimate_mu(m, L.theta(), {c, cover.radius}, mu_checks, 7 + static_cast<std::uint64_t>(ci));
    mu_min = std::min(mu_min, mu);
    mu_max = std::max(mu_max, mu);
  }
  // λ_min(g) on the union of the balls.
  Box grown{K.lo - Vec::Constant(d, cover.radius), K.hi + Vec::Constant(d, cover.radius)};
  double lmin = std::numeric_limits<double>::infinity();
  for (const Vec& x : sample_region(m, grown, 9)) {
    Eigen::SelfAdjointEigenSolver<Mat> es(m.metric(x), Eigen::EigenvaluesOnly);
    lmin = std::min(lmin, es.eigenvalues()[0]);
  }
  const double delta = 2.0 * std::sqrt(lmin) * reach;
  const double A1 = estimate_growth_constants(L, K, 4.0).A1;
  const double e0 = e0_estimate(L, K, 256);
  BarrierEstimate b = barrier_from_constants(A1, e0, mu_max, delta, k);
  b.mu_min = mu_min;
  b.mu_max = mu_max;
  b.balls = total;
  return b;
}

// ---------------------------------------------------------------------------
// Sweepouts

PathOfLoops latitude_sweepout(const Lagrangian& L, double k, int nodes, int n, double pole_period, const Vec& axis_in,
                              double wobble) {
  const Manifold& m = L.manifold();
  if (m.is_chart() || m.coord_dim() != 3) throw MinimaxError("latitude sweepouts live on an embedded sphere");
  if (nodes < 3) throw MinimaxError("a sweepout needs at least three nodes");
  const Vec axis = axis_in.size() == 3 ? Vec(axis_in.normalized()) : Vec(Vec::Unit(3, 2));
  Eigen::Vector3d a3 = Eigen::Vector3d(axis[0], axis[1], axis[2]);
  Eigen::Vector3d e1 = a3.unitOrthogonal();
  Eigen::Vector3d e2 = a3.cross(e1);
  const double R = m.project(axis).norm();
  PathOfLoops p;
  for (int j = 0; j < nodes; ++j) {
    const double s = static_cast<double>(j) / (nodes - 1);
    Loop l;
    if (j == 0 || j == nodes - 1) {
      l = constant_loop(Vec((j == 0 ? R : -R) * a3), pole_period, n);
    } else {
      const double phi = std::numbers::pi * s;
      const double amp = wobble * std::sin(phi);
      l = sample_loop(
          [&](double t) {
            const double w = 2 * std::numbers::pi * t;
            const Eigen::Vector3d z = R * (std::cos(phi) * a3 + std::sin(phi) * (std::cos(w) * e1 + std::sin(w) * e2)) +
                                      amp * std::sin(2 * w) * a3;
            return m.project(Vec(z));
          },
          1.0, n);
      const PeriodOptimum opt = optimize_period(L, k, l);
      l.period = opt.unbounded ? pole_period : std::max(opt.period, 1e-3);
    }
    l.winding = Eigen::VectorXi();
    p.nodes.push_back(std::move(l));
  }
  return p;
}

MinimaxResult sweepout_minimax(const Lagrangian& L, double k, const PathOfLoops& sweep, double cu_estimate,
                               const MinimaxOptions& opt) {
  const Manifold& m = L.manifold();
  if (m.is_chart()) throw MinimaxError("sweepout minimax needs an embedded simply-connected manifold");
  if (!(k > cu_estimate)) throw MinimaxError("sweepout minimax needs k above the c_u estimate");
  if (sweep.nodes.size() < 3) throw MinimaxError("a sweepout needs at least three nodes");
  if (!is_constant(sweep.nodes.front()) || !is_constant(sweep.nodes.back()))
    throw MinimaxError("sweepout endpoints must be constant loops");
  for (const Loop& l : sweep.nodes) validate_loop(m, l);

  MinimaxResult res;
  res.family_kind = FamilyKind::Sweepout;
  res.k = k;
  res.path = sweep;
  {
    std::vector<double> S;
    for (const Loop& l : sweep.nodes) S.push_back(action(L, k, l));
    const int top = top_node(S, 1e-3);
    res.initial_minimax_length = length(m, sweep.nodes[static_cast<std::size_t>(top)]);
  }
  FlowConfig flow;
  const StringOutcome s = run_string(L, k, std::nullopt, flow, 1e-3, true, opt, res);
  res.string_level = s.level;
  res.family_length = s.family_length;
  if (!(s.family_length > 1e-3 * res.initial_minimax_length))
    throw MinimaxError("sweep degenerated: every loop of the family became short");
  const Loop start = climb(L, k, res.path, s.top, opt);
  polish(L, k, start, 1e-9, 1e-3, OrbitMethod::Sweepout, opt, res);

  const double len = length(m, res.argmax);
  if (len < 0.5 * res.initial_minimax_length) {
    res.converged = false;
    res.log.push_back("critical loop is shorter than half the initial minimax length");
  }
  // Period lower bound with A3 raised to max(A3, 2k + 1).
  Box ball{Vec::Constant(3, -1.0), Vec::Constant(3, 1.0)};
  const GrowthConstants gc = estimate_growth_constants(L, ball, 4.0, 5);
  const double A2 = gc.A2, A3 = std::max(gc.A3, 2 * k + 1);
  const double A = res.level + 1.0, l = res.family_length;
  res.period_bound = (-A + std::sqrt(A * A + 4 * A2 * (A3 - k) * l * l)) / (2 * (A3 - k));
  res.level_bound = (k - cu_estimate) * res.period_bound;
  std::ostringstream os;
  os << "period bound " << res.period_bound << " (A2 = " << A2 << ", A3 = " << A3 << ", l = " << l
     << "), level bound " << res.level_bound;
  res.log.push_back(os.str());
  if (!(res.level_bound > 0.0)) throw MinimaxError("sweepout level bound is not positive");
  if (res.converged && len >= l && res.argmax.period < res.period_bound) {
    res.converged = false;
    res.log.push_back("critical loop violates the period lower bound");
  }
  return res;
}

// ---------------------------------------------------------------------------
// Class minimization

namespace {

struct StartOutcome {
  bool drifted = false;
  DriftReport drift;
  std::optional<RefineResult> refined;
  PSRecord ps;
};

StartOutcome minimize_start(const Lagrangian& L, double k, Loop loop, const ClassMinOptions& opt) {
  const Manifold& m = L.manifold();
  StartOutcome out;
  const int d = loop.coord_dim();
  std::vector<Vec> means;
  FlowConfig cfg;
  cfg.confinement = opt.drift_box;
  cfg.gradient_tol = 1e-7;
  int escaped = -1;
  for (int c = 0; c < opt.chunks; ++c) {
    const PeriodOptimum po = optimize_period(L, k, loop);
    if (!po.unbounded) loop.period = po.period;
    means.push_back(loop.samples.rowwise().mean());
    FlowResult r;
    try {
      r = evolve(cfg, L, k, loop, opt.chunk_time);
    } catch (const FlowStall& e) {
      out.ps.steps.insert(out.ps.steps.end(), e.record().steps.begin(), e.record().steps.end());
      break;
    }
    out.ps.steps.insert(out.ps.steps.end(), r.record.steps.begin(), r.record.steps.end());
    loop = r.loop;
    if (r.record.verdict == PSVerdict::Escaped) {
      escaped = r.record.escaped_sample;
      means.push_back(loop.samples.rowwise().mean());
      break;
    }
    if (r.record.verdict == PSVerdict::Converged || r.record.verdict == PSVerdict::PeriodCollapse) break;
  }
  if (escaped >= 0) {
    out.drifted = true;
    const Box& box = *opt.drift_box;
    const Vec x = loop.point(escaped);
    DriftReport& dr = out.drift;
    for (int q = 0; q < d; ++q) {
      if (x[q] < box.lo[q]) dr = {q, -1, {}, {}, false, ""};
      else if (x[q] > box.hi[q]) dr = {q, 1, {}, {}, false, ""};
      if (dr.coordinate >= 0) break;
    }
    for (const Vec& mu : means) dr.mean.push_back(mu[dr.coordinate]);
    dr.extreme.push_back(dr.side < 0 ? loop.samples.row(dr.coordinate).minCoeff()
                                     : loop.samples.row(dr.coordinate).maxCoeff());
    dr.monotone = true;
    for (std::size_t i = 1; i < dr.mean.size(); ++i)
      if (dr.side * (dr.mean[i] - dr.mean[i - 1]) <= 0.0) dr.monotone = false;
    std::ostringstream os;
    os << "coordinate " << m.coordinate_names()[static_cast<std::size_t>(dr.coordinate)] << " left the drift box "
       << (dr.side < 0 ? "below " : "above ") << (dr.side < 0 ? box.lo[dr.coordinate] : box.hi[dr.coordinate])
       << " after " << dr.mean.size() - 1 << " chunks";
    dr.note = os.str();
    return out;
  }
  out.refined = refine_critical_point(L, k, resample(m, loop, opt.refine_n), opt.gradient_tol);
  return out;
}

}  // namespace

MinimaxResult class_minimize(const Lagrangian& L, double k, const Eigen::VectorXi& alpha, const Loop& seed,
                             const ClassMinOptions& opt) {
  const Manifold& m = L.manifold();
  if (!m.is_chart()) throw MinimaxError("class minimization tracks classes on periodic charts");
  if (alpha.size() != m.coord_dim() || alpha.isZero()) throw MinimaxError("class must be a non-zero winding vector");
  validate_loop(m, seed);
  if (seed.winding != alpha) throw MinimaxError("seed loop is not in the requested class");
  if (!(k > opt.cu_estimate)) throw MinimaxError("class minimization needs k above the c_u estimate");
  if (opt.drift_box && opt.drift_box->dim() != m.coord_dim()) throw MinimaxError("drift box dimension mismatch");

  const int starts = std::max(1, opt.starts);
  std::vector<Loop> seeds{seed};
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int s = 1; s < starts; ++s) {
    Loop l = seed;
    for (int q = 0; q < l.coord_dim(); ++q) {
      const double a1 = nd(rng), b1 = nd(rng), a2 = nd(rng);
      for (int i = 0; i < l.size(); ++i) {
        const double w = 2 * std::numbers::pi * i / l.size();
        l.samples(q, i) += opt.perturbation * (a1 * std::cos(w) + b1 * std::sin(w) + 0.5 * a2 * std::cos(2 * w));
      }
    }
    seeds.push_back(std::move(l));
  }
  std::vector<StartOutcome> outs(seeds.size());
  detail::parallel_for(static_cast<int>(seeds.size()), opt.jobs,
                       [&](int i) { outs[static_cast<std::size_t>(i)] = minimize_start(L, k, seeds[static_cast<std::size_t>(i)], opt); });

  MinimaxResult res;
  res.family_kind = FamilyKind::ClassMin;
  res.k = k;
  int best = -1, drifted = 0;
  for (std::size_t i = 0; i < outs.size(); ++i) {
    if (outs[i].drifted) {
      ++drifted;
      continue;
    }
    const RefineResult& r = *outs[i].refined;
    if (!r.converged) continue;
    if (best < 0 || r.action < outs[static_cast<std::size_t>(best)].refined->action) best = static_cast<int>(i);
  }
  std::ostringstream os;
  os << drifted << " of " << outs.size() << " starts drifted";
  res.log.push_back(os.str());
  if (best < 0) {
    const auto it = std::find_if(outs.begin(), outs.end(), [](const StartOutcome& o) { return o.drifted; });
    if (it != outs.end()) {
      res.drift = it->drift;
      res.ps = it->ps;
      res.ps.verdict = PSVerdict::Escaped;
      res.classification = {PSVerdict::Escaped, true, it->drift.note};
      res.level = res.ps.steps.empty() ? 0.0 : res.ps.last().action;
      res.log.push_back(it->drift.note);
    } else {
      const StartOutcome& o = outs.front();
      res.ps = o.ps;
      if (o.refined) {
        res.argmax = o.refined->loop;
        res.level = o.refined->action;
      }
      res.classification = {PSVerdict::Budget, true, "no start converged"};
      res.log.push_back("no start converged");
    }
    return res;
  }
  const StartOutcome& o = outs[static_cast<std::size_t>(best)];
  res.ps = o.ps;
  MinimaxOptions mo;
  mo.refine_n = o.refined->loop.size();
  mo.certificate = opt.certificate;
  mo.newton_iterations = 30;
  polish(L, k, o.refined->loop, opt.gradient_tol, 1e-3, OrbitMethod::ClassMin, mo, res);
  // S_k = S_c + (k − c) T at the estimated c_u.
  const double split = action(L, opt.cu_estimate, res.argmax) + (k - opt.cu_estimate) * res.argmax.period;
  std::ostringstream os2;
  os2 << "identity S_k - (S_c + (k - c) T) = " << res.level - split;
  res.log.push_back(os2.str());
  return res;
}

}  // namespace varorbit
