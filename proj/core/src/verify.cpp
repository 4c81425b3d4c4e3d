#include "varorbit/verify.hpp"

#include <cmath>
#include <stdexcept>

namespace varorbit {

std::string to_string(OrbitMethod m) {
  switch (m) {
    case OrbitMethod::MountainPass: return "mountain-pass";
    case OrbitMethod::Sweepout: return "sweepout";
    case OrbitMethod::ClassMin: return "class-min";
  }
  return "unknown";
}

OrbitMethod orbit_method_from_string(const std::string& s) {
  if (s == "mountain-pass") return OrbitMethod::MountainPass;
  if (s == "sweepout") return OrbitMethod::Sweepout;
  if (s == "class-min") return OrbitMethod::ClassMin;
  throw std::invalid_argument("unknown method '" + s + "' (expected mountain-pass, sweepout or class-min)");
}

namespace {

// Periodic central derivative of columns (order 4 or 6); `off` is added per
// wrap-around.
Eigen::MatrixXd periodic_derivative(const Eigen::MatrixXd& x, const Vec& off, double h, int order = 4) {
  const int n = static_cast<int>(x.cols());
  auto at = [&](int i) -> Vec {
    const int w = (i >= 0) ? i / n : -((-i + n - 1) / n);
    return Vec(x.col(i - w * n)) + static_cast<double>(w) * off;
  };
  Eigen::MatrixXd d(x.rows(), n);
  for (int i = 0; i < n; ++i) {
    if (order == 6)
      d.col(i) = (at(i + 3) - 9.0 * at(i + 2) + 45.0 * at(i + 1) - 45.0 * at(i - 1) + 9.0 * at(i - 2) - at(i - 3)) /
                 (60.0 * h);
    else
      d.col(i) = (-at(i + 2) + 8.0 * at(i + 1) - 8.0 * at(i - 1) + at(i - 2)) / (12.0 * h);
  }
  return d;
}

// Dual norm of a covector at x.
double covector_norm(const Manifold& m, const Vec& x, const Vec& p) {
  if (m.is_chart()) return std::sqrt(std::max(0.0, p.dot(m.metric(x).ldlt().solve(p))));
  return Vec(m.tangent_projection(x) * p).norm();
}

struct State {
  Vec x, v;
};

Vec acceleration(const Lagrangian& L, const Vec& x, const Vec& v) {
  const Manifold& m = L.manifold();
  Vec force = L.two_form(x) * v;
  if (!L.potential().is_zero()) force += L.potential().gradient(x);
  if (m.is_chart()) {
    Vec a = m.metric(x).ldlt().solve(force);
    if (!m.is_flat()) a -= m.christoffel(x).contract(v) * v;
    return a;
  }
  const auto& e = m.embedding();
  const Vec grad = e.constraint_gradient(x);
  const double gn = grad.norm();
  const Vec n = grad / gn;
  return Vec(m.tangent_projection(x) * force) - (v.dot(e.constraint_hessian(x) * v) / gn) * n;
}

}  // namespace

Eigen::MatrixXd sample_velocities(const Manifold& m, const Loop& loop, int order) {
  if (order != 4 && order != 6) throw std::invalid_argument("velocity stencils have order 4 or 6");
  return periodic_derivative(loop.samples, lift_offset(m, loop), loop.period / loop.size(), order);
}

double el_residual(const Lagrangian& L, const Loop& loop) {
  const Manifold& m = L.manifold();
  validate_loop(m, loop);
  const int n = loop.size();
  const Eigen::MatrixXd v = sample_velocities(m, loop);
  Eigen::MatrixXd p(loop.coord_dim(), n), lx(loop.coord_dim(), n);
  for (int i = 0; i < n; ++i) {
    const auto jet = L.jet(loop.point(i), Vec(v.col(i)));
    p.col(i) = jet.Lv;
    lx.col(i) = jet.Lx;
  }
  const Eigen::MatrixXd pdot = periodic_derivative(p, Vec::Zero(loop.coord_dim()), loop.period / n);
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    worst = std::max(worst, covector_norm(m, loop.point(i), Vec(pdot.col(i) - lx.col(i))));
  return worst;
}

double energy_deviation(const Lagrangian& L, const Loop& loop, double k) {
  const Eigen::MatrixXd v = sample_velocities(L.manifold(), loop, 6);
  double worst = 0.0;
  for (int i = 0; i < loop.size(); ++i) worst = std::max(worst, std::abs(L.energy(loop.point(i), Vec(v.col(i))) - k));
  return worst;
}

ShootReport shoot(const Lagrangian& L, const Vec& x0, const Vec& v0, double T, int steps, int record) {
  if (!(T > 0.0)) throw std::invalid_argument("shooting time must be positive");
  if (steps < 1) throw std::invalid_argument("need at least one shooting step");
  const Manifold& m = L.manifold();
  if (record > 0 && steps % record) steps += record - steps % record;
  const double h = T / steps;
  const double e0 = L.energy(x0, v0);
  const double vmax = 1e3 * std::max(m.norm(x0, v0), 1.0);
  ShootReport rep;
  rep.steps = steps;
  if (record > 0) rep.trajectory.resize(x0.size(), record);
  State s{x0, v0};
  auto rhs = [&](const State& q) { return State{q.v, acceleration(L, q.x, q.v)}; };
  for (int i = 0; i < steps; ++i) {
    if (record > 0 && i % (steps / record) == 0) rep.trajectory.col(i / (steps / record)) = s.x;
    const State k1 = rhs(s);
    const State k2 = rhs({s.x + 0.5 * h * k1.x, s.v + 0.5 * h * k1.v});
    const State k3 = rhs({s.x + 0.5 * h * k2.x, s.v + 0.5 * h * k2.v});
    const State k4 = rhs({s.x + h * k3.x, s.v + h * k3.v});
    s.x += (h / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    s.v += (h / 6.0) * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
    if (!m.is_chart()) {
      // keep the state on TM against drift of the explicit scheme
      s.x = m.project(s.x);
      s.v = m.tangent_projection(s.x) * s.v;
    }
    if (!s.x.allFinite() || !s.v.allFinite() || m.norm(s.x, s.v) > vmax) {
      rep.diverged = true;
      rep.closure = std::numeric_limits<double>::infinity();
      rep.energy_drift = std::numeric_limits<double>::infinity();
      rep.x_end = s.x;
      rep.v_end = s.v;
      return rep;
    }
    rep.energy_drift = std::max(rep.energy_drift, std::abs(L.energy(s.x, s.v) - e0));
  }
  rep.x_end = s.x;
  rep.v_end = s.v;
  const Vec dx = m.is_chart() ? m.shortest_displacement(x0, s.x) : Vec(s.x - x0);
  rep.closure = m.norm(x0, dx) + m.norm(x0, Vec(s.v - v0));
  return rep;
}

double shooting_order(const Lagrangian& L, const Vec& x0, const Vec& v0, double T, int base_steps) {
  const auto a = shoot(L, x0, v0, T, base_steps);
  const auto b = shoot(L, x0, v0, T, 2 * base_steps);
  const auto c = shoot(L, x0, v0, T, 4 * base_steps);
  auto dist = [](const ShootReport& p, const ShootReport& q) {
    return (p.x_end - q.x_end).norm() + (p.v_end - q.v_end).norm();
  };
  return std::log2(dist(a, b) / dist(b, c));
}

OrbitCertificate certify(const Lagrangian& L, double k, const Loop& loop, OrbitMethod method,
                         const CertificateTolerances& tol) {
  const Manifold& m = L.manifold();
  OrbitCertificate c;
  c.loop = loop;
  c.k = k;
  c.method = method;
  c.tolerances = tol;
  c.action = action(L, k, loop);
  c.el_residual = el_residual(L, loop);
  c.energy_dev = energy_deviation(L, loop, k);
  const Eigen::MatrixXd v = sample_velocities(m, loop, 6);
  const auto sh = shoot(L, loop.point(0), Vec(v.col(0)), loop.period, tol.shooting_steps);
  c.closure_err = sh.closure;
  c.energy_drift = sh.energy_drift;
  c.length = length(m, loop);
  c.homotopy = m.is_chart() ? loop.winding : Eigen::VectorXi();
  auto check = [&](const char* name, double value, double limit) {
    if (!(std::isfinite(value) && value < limit)) c.failures.emplace_back(name);
  };
  check("el_residual", c.el_residual, tol.el_residual);
  check("energy_dev", c.energy_dev, tol.energy_dev);
  check("closure_err", c.closure_err, tol.closure);
  if (method != OrbitMethod::ClassMin && !(c.action > 0.0)) c.failures.emplace_back("action");
  c.pass = c.failures.empty();
  return c;
}

}  // namespace varorbit
