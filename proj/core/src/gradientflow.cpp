#include "varorbit/gradientflow.hpp"

#include <cmath>
#include <sstream>

namespace varorbit {

std::string to_string(PSVerdict v) {
  switch (v) {
    case PSVerdict::Converged: return "converged";
    case PSVerdict::PeriodCollapse: return "period_collapse";
    case PSVerdict::PeriodBlowup: return "period_blowup";
    case PSVerdict::Escaped: return "escaped";
    case PSVerdict::Budget: return "budget";
  }
  return "unknown";
}

FlowConfig FlowConfig::truncated_at(double level, double tau) {
  FlowConfig cfg;
  cfg.kind = FlowKind::Truncated;
  cfg.tau = tau;
  cfg.cutoff_low = level / 4.0;
  cfg.cutoff_high = level / 2.0;
  return cfg;
}

void FlowConfig::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("flow tau must be positive");
  if (kind == FlowKind::Truncated && !(cutoff_low >= 0.0 && cutoff_low < cutoff_high))
    throw std::invalid_argument("truncated flow needs 0 <= cutoff_low < cutoff_high");
  if (!(step > 0.0) || !(max_step >= step) || !(min_step > 0.0))
    throw std::invalid_argument("flow steps must satisfy 0 < min_step, 0 < step <= max_step");
}

double cutoff(const FlowConfig& cfg, double action) {
  if (cfg.kind == FlowKind::Rescaled) return 1.0;
  return cfg.tau * smoothstep5((action - cfg.cutoff_low) / (cfg.cutoff_high - cfg.cutoff_low)).h;
}

namespace {

struct FieldEval {
  LoopTangent v;
  double action = 0.0;
  double grad_norm = 0.0;
  double rate = 0.0;  // −dS/dt along the field
};

FieldEval eval_field(const FlowConfig& cfg, const Lagrangian& L, double k, const Loop& loop, RieszSolver& solver) {
  const auto d = differential(L, k, loop);
  solver.factorize(loop);
  const LoopTangent g = solver.solve(d.dS);
  const double g2 = solver.inner(g, g);
  const double rho = cutoff(cfg, d.action);
  const double damp = 1.0 / std::sqrt(1.0 + g2);
  FieldEval e;
  e.v = g * (-rho * damp);
  e.action = d.action;
  e.grad_norm = std::sqrt(g2);
  e.rate = rho * g2 * damp;
  return e;
}

double excursion(const Loop& start, const Loop& cur) {
  return (cur.samples - start.samples).colwise().norm().maxCoeff();
}

int first_outside(const Box& box, const Loop& loop) {
  for (int i = 0; i < loop.size(); ++i)
    if (!box.contains(loop.point(i))) return i;
  return -1;
}

}  // namespace

LoopTangent field(const FlowConfig& cfg, const Lagrangian& L, double k, const Loop& loop) {
  cfg.validate();
  RieszSolver solver(L.manifold_ptr());
  return eval_field(cfg, L, k, loop, solver).v;
}

FlowResult evolve(const FlowConfig& cfg, const Lagrangian& L, double k, const Loop& loop, double duration) {
  cfg.validate();
  if (!(duration >= 0.0)) throw std::invalid_argument("flow duration must be non-negative");
  validate_loop(L.manifold(), loop);
  const Manifold& m = L.manifold();
  RieszSolver solver(L.manifold_ptr());

  FlowResult out{loop, {}};
  PSRecord& rec = out.record;
  Loop& cur = out.loop;
  FieldEval e = eval_field(cfg, L, k, cur, solver);
  double t = 0.0;
  rec.steps.push_back({0.0, e.action, e.grad_norm, cur.period, 0.0});

  // Stage loop at x + c ξ, log T + c κ.
  auto stage = [&](const Eigen::MatrixXd& dx, double dlogT) {
    Loop s = cur;
    s.samples += dx;
    if (!m.is_chart())
      for (int i = 0; i < s.size(); ++i) s.samples.col(i) = m.project(s.point(i));
    s.period = cur.period * std::exp(dlogT);
    return s;
  };

  double h = cfg.step;
  int steps = 0;
  bool stationary = false;
  while (t < duration && steps < cfg.max_steps) {
    if (e.grad_norm < cfg.gradient_tol) break;
    if (cur.period < cfg.min_period) {
      rec.verdict = PSVerdict::PeriodCollapse;
      return out;
    }
    if (e.rate == 0.0) {
      stationary = true;
      break;
    }
    const double hh = std::min(h, duration - t);
    bool ok = false;
    Loop next;
    FieldEval enext;
    double dissipated = 0.0;
    try {
      const Eigen::MatrixXd& k1 = e.v.xi;
      const double c1 = e.v.alpha / cur.period;
      const Loop s2 = stage(0.5 * hh * k1, 0.5 * hh * c1);
      const FieldEval e2 = eval_field(cfg, L, k, s2, solver);
      const double c2 = e2.v.alpha / s2.period;
      const Loop s3 = stage(0.5 * hh * e2.v.xi, 0.5 * hh * c2);
      const FieldEval e3 = eval_field(cfg, L, k, s3, solver);
      const double c3 = e3.v.alpha / s3.period;
      const Loop s4 = stage(hh * e3.v.xi, hh * c3);
      const FieldEval e4 = eval_field(cfg, L, k, s4, solver);
      const double c4 = e4.v.alpha / s4.period;
      next = stage((hh / 6.0) * (k1 + 2.0 * e2.v.xi + 2.0 * e3.v.xi + e4.v.xi), (hh / 6.0) * (c1 + 2 * c2 + 2 * c3 + c4));
      enext = eval_field(cfg, L, k, next, solver);
      dissipated = (hh / 6.0) * (e.rate + 2 * e2.rate + 2 * e3.rate + e4.rate);
      ok = std::isfinite(enext.action) && enext.action <= e.action + 1e-14 * std::max(1.0, std::abs(e.action));
    } catch (const std::runtime_error&) {
      ok = false;
    }
    if (!ok) {
      h = 0.5 * hh;
      if (h < cfg.min_step) {
        rec.verdict = PSVerdict::Budget;
        std::ostringstream os;
        os << "flow integration stalled at t = " << t << " (step below " << cfg.min_step << ", action " << e.action
           << ", gradient norm " << e.grad_norm << ")";
        throw FlowStall(os.str(), rec);
      }
      continue;
    }
    const double predicted = hh * e.rate;
    const double actual = e.action - enext.action;
    cur = std::move(next);
    e = std::move(enext);
    t += hh;
    ++steps;
    rec.dissipated += dissipated;
    rec.steps.push_back({t, e.action, e.grad_norm, cur.period, excursion(loop, cur)});
    if (actual >= 0.5 * predicted && hh == h) h = std::min(1.5 * h, cfg.max_step);
    else if (actual < 0.1 * predicted) h = std::max(0.5 * hh, cfg.min_step);
    if (cfg.confinement) {
      const int out_idx = first_outside(*cfg.confinement, cur);
      if (out_idx >= 0) {
        rec.escaped_sample = out_idx;
        rec.verdict = PSVerdict::Escaped;
        return out;
      }
    }
  }
  if (e.grad_norm < cfg.gradient_tol) rec.verdict = PSVerdict::Converged;
  else rec.verdict = PSVerdict::Budget;
  if (stationary) rec.steps.push_back({duration, e.action, e.grad_norm, cur.period, excursion(loop, cur)});
  if (cur.winding != loop.winding) throw LoopError("flow changed the homotopy class");
  return out;
}

PSClassification ps_classify(const PSRecord& rec, double D1, double D2, double gradient_tol, double level_tol) {
  if (rec.steps.empty()) throw std::invalid_argument("empty PS record");
  const PSStep& s = rec.last();
  PSClassification c;
  if (s.period < D1) {
    c.verdict = PSVerdict::PeriodCollapse;
    c.consistent = std::abs(s.action) < level_tol;
    std::ostringstream os;
    os << "period " << s.period << " below " << D1;
    if (!c.consistent) os << " at action " << s.action << ": a collapsing PS sequence must have level 0 (discretization warning)";
    c.note = os.str();
  } else if (s.period > D2) {
    c.verdict = PSVerdict::PeriodBlowup;
    c.note = "period " + std::to_string(s.period) + " above " + std::to_string(D2);
  } else if (s.grad_norm < gradient_tol) {
    c.verdict = PSVerdict::Converged;
  } else if (rec.verdict == PSVerdict::Escaped) {
    c.verdict = PSVerdict::Escaped;
    c.note = "sample " + std::to_string(rec.escaped_sample) + " left the confinement box";
  } else {
    c.verdict = PSVerdict::Budget;
  }
  return c;
}

}  // namespace varorbit
