#include "varorbit/loopspace.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

namespace varorbit {

void validate_loop(const Manifold& m, const Loop& loop) {
  if (!(loop.period > 0.0) || !std::isfinite(loop.period))
    throw LoopError("loop period must be positive, got " + std::to_string(loop.period));
  if (loop.size() < 8) throw LoopError("loops need at least 8 samples");
  if (loop.coord_dim() != m.coord_dim()) throw LoopError("loop sample dimension does not match the manifold");
  if (!loop.samples.allFinite()) throw LoopError("non-finite loop samples");
  if (m.is_chart()) {
    if (loop.winding.size() != m.coord_dim()) throw LoopError("winding must have one entry per chart coordinate");
    for (int i = 0; i < m.coord_dim(); ++i)
      if (loop.winding[i] != 0 && !(m.periods()[i] > 0.0))
        throw LoopError("non-zero winding along a non-periodic coordinate");
  } else {
    if (loop.winding.size() != 0 && loop.winding.any()) throw LoopError("embedded loops carry no winding");
    const auto& c = m.embedding().constraint;
    for (int i = 0; i < loop.size(); ++i) {
      const Vec z = loop.point(i);
      if (std::abs(c(z)) > 1e-10 * std::max(1.0, z.squaredNorm()))
        throw LoopError("embedded sample " + std::to_string(i) + " is off the surface");
    }
  }
}

Vec lift_offset(const Manifold& m, const Loop& loop) {
  Vec off = Vec::Zero(loop.coord_dim());
  if (m.is_chart())
    for (int i = 0; i < loop.coord_dim(); ++i) off[i] = loop.winding[i] * m.periods()[i];
  return off;
}

Vec segment(const Manifold& m, const Loop& loop, int i) {
  const int n = loop.size();
  if (i + 1 < n) return loop.samples.col(i + 1) - loop.samples.col(i);
  return Vec(loop.samples.col(0)) + lift_offset(m, loop) - Vec(loop.samples.col(n - 1));
}

double action(const Lagrangian& L, double k, const Loop& loop) {
  const Manifold& m = L.manifold();
  if (!(loop.period > 0.0)) throw LoopError("loop period must be positive");
  const int n = loop.size();
  const double T = loop.period;
  const Vec off = lift_offset(m, loop);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec a = loop.samples.col(i);
    const Vec b = (i + 1 < n) ? Vec(loop.samples.col(i + 1)) : Vec(Vec(loop.samples.col(0)) + off);
    const Vec v = (b - a) * (n / T);
    sum += L.value(Vec(0.5 * (a + b)), v);
  }
  return sum * (T / n) + k * T;
}

ActionDifferential differential(const Lagrangian& L, double k, const Loop& loop) {
  const Manifold& m = L.manifold();
  if (!(loop.period > 0.0)) throw LoopError("loop period must be positive");
  const int n = loop.size();
  const double T = loop.period;
  const double h = T / n;
  const Vec off = lift_offset(m, loop);
  ActionDifferential out;
  out.dS.position = Eigen::MatrixXd::Zero(loop.coord_dim(), n);
  double sum = 0.0, dT = 0.0;
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    const Vec a = loop.samples.col(i);
    const Vec b = (i + 1 < n) ? Vec(loop.samples.col(j)) : Vec(Vec(loop.samples.col(0)) + off);
    const Vec v = (b - a) * (n / T);
    const auto jet = L.jet(Vec(0.5 * (a + b)), v);
    sum += jet.value;
    dT += k - (jet.Lv.dot(v) - jet.value);
    const Vec half = (0.5 * h) * jet.Lx;
    out.dS.position.col(i) += half - jet.Lv;
    out.dS.position.col(j) += half + jet.Lv;
  }
  out.action = sum * h + k * T;
  out.dS.period = dT / n;
  return out;
}

RieszSolver::RieszSolver(ManifoldPtr manifold) : manifold_(std::move(manifold)) {
  if (!manifold_) throw LoopError("Riesz solver needs a manifold");
}

void RieszSolver::factorize(const Loop& loop) {
  const Manifold& m = *manifold_;
  const int N = loop.size();
  const bool chart = m.is_chart();
  const int c = chart ? m.coord_dim() : m.dim();
  const int size = c * N;
  if (size != metric_.rows() || c != block_) analyzed_ = false;
  block_ = c;
  n_ = N;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(4 * c * c * N + c * c));
  auto add_block = [&](int bi, int bj, const Mat& blk) {
    for (int r = 0; r < c; ++r)
      for (int s = 0; s < c; ++s) trip.emplace_back(bi * c + r, bj * c + s, blk(r, s));
  };

  if (!chart) {
    bases_.resize(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) bases_[static_cast<std::size_t>(i)] = m.tangent_basis(loop.point(i));
  }

  const Vec off = lift_offset(m, loop);
  const double invN = 1.0 / N;
  for (int i = 0; i < N; ++i) {
    const int j = (i + 1) % N;
    const Vec a = loop.samples.col(i);
    const Vec b = (i + 1 < N) ? Vec(loop.samples.col(j)) : Vec(Vec(loop.samples.col(0)) + off);
    const Vec mid = 0.5 * (a + b);
    Mat P, Q, g;
    if (chart) {
      const int d = c;
      g = m.metric(mid);
      Mat C = Mat::Zero(d, d);
      if (!m.is_flat()) C = m.christoffel(mid).contract(Vec((b - a) * N));
      P = N * Mat::Identity(d, d) + 0.5 * C;
      Q = -N * Mat::Identity(d, d) + 0.5 * C;
    } else {
      const Mat proj = m.tangent_projection(m.project(mid));
      P = N * proj * bases_[static_cast<std::size_t>(j)];
      Q = -N * proj * bases_[static_cast<std::size_t>(i)];
      g = Mat::Identity(P.rows(), P.rows());
    }
    add_block(i, i, invN * Q.transpose() * g * Q);
    add_block(i, j, invN * Q.transpose() * g * P);
    add_block(j, i, invN * P.transpose() * g * Q);
    add_block(j, j, invN * P.transpose() * g * P);
  }
  // base-point term ⟨ξ(0), η(0)⟩_{x(0)}
  if (chart) add_block(0, 0, m.metric(loop.point(0)));
  else add_block(0, 0, Mat::Identity(c, c));

  metric_.resize(size, size);
  metric_.setFromTriplets(trip.begin(), trip.end());
  if (!analyzed_) {
    ldlt_.analyzePattern(metric_);
    analyzed_ = true;
  }
  ldlt_.factorize(metric_);
  bool ok = ldlt_.info() == Eigen::Success;
  int bad = -1;
  if (ok) {
    const auto& D = ldlt_.vectorD();
    for (int r = 0; r < D.size(); ++r)
      if (!(D[r] > 1e-300) || !std::isfinite(D[r])) {
        ok = false;
        bad = ldlt_.permutationPinv().indices()[r];
        break;
      }
  }
  if (!ok) {
    std::ostringstream os;
    os << "singular loop-space metric";
    if (bad >= 0) os << " at block of sample " << bad / c;
    throw LoopError(os.str());
  }
}

Eigen::VectorXd RieszSolver::reduce(const LoopTangent& t) const {
  if (manifold_->is_chart()) return Eigen::Map<const Eigen::VectorXd>(t.xi.data(), t.xi.size());
  Eigen::VectorXd r(block_ * n_);
  for (int i = 0; i < n_; ++i)
    r.segment(i * block_, block_) = bases_[static_cast<std::size_t>(i)].transpose() * Vec(t.xi.col(i));
  return r;
}

Eigen::VectorXd RieszSolver::reduce_covector(const LoopCovector& cv) const {
  return reduce(LoopTangent{cv.position, 0.0});
}

LoopTangent RieszSolver::expand(const Eigen::VectorXd& coords, double alpha) const {
  LoopTangent t;
  t.alpha = alpha;
  if (manifold_->is_chart()) {
    t.xi = Eigen::Map<const Eigen::MatrixXd>(coords.data(), block_, n_);
    return t;
  }
  t.xi.resize(manifold_->coord_dim(), n_);
  for (int i = 0; i < n_; ++i)
    t.xi.col(i) = bases_[static_cast<std::size_t>(i)] * Vec(coords.segment(i * block_, block_));
  return t;
}

LoopTangent RieszSolver::solve(const LoopCovector& dS) const {
  const Eigen::VectorXd rhs = reduce_covector(dS);
  const Eigen::VectorXd u = ldlt_.solve(rhs);
  return expand(u, dS.period);
}

double RieszSolver::inner(const LoopTangent& a, const LoopTangent& b) const {
  const Eigen::VectorXd ra = reduce(a), rb = reduce(b);
  return ra.dot(metric_ * rb) + a.alpha * b.alpha;
}

double RieszSolver::norm(const LoopTangent& a) const { return std::sqrt(std::max(0.0, inner(a, a))); }

LoopTangent riesz_gradient(const Lagrangian& L, const Loop& loop, const LoopCovector& dS) {
  RieszSolver solver(L.manifold_ptr());
  solver.factorize(loop);
  return solver.solve(dS);
}

Loop advance(const Manifold& m, const Loop& loop, const LoopTangent& t, double h) {
  Loop out = loop;
  out.samples += h * t.xi;
  if (!m.is_chart())
    for (int i = 0; i < out.size(); ++i) out.samples.col(i) = m.project(out.point(i));
  out.period = loop.period * std::exp(h * t.alpha / loop.period);
  return out;
}

double length(const Manifold& m, const Loop& loop) {
  const int n = loop.size();
  const Vec off = lift_offset(m, loop);
  double len = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec a = loop.samples.col(i);
    const Vec b = (i + 1 < n) ? Vec(loop.samples.col(i + 1)) : Vec(Vec(loop.samples.col(0)) + off);
    len += m.norm(Vec(0.5 * (a + b)), Vec(b - a));
  }
  return len;
}

double loop_difference_norm(const Manifold& m, const Loop& a, const Loop& b) {
  if (a.size() != b.size() || a.winding != b.winding) throw LoopError("loops must share N and winding");
  auto mp = std::shared_ptr<const Manifold>(&m, [](const Manifold*) {});
  RieszSolver solver(mp);
  solver.factorize(a);
  const LoopTangent d{b.samples - a.samples, b.period - a.period};
  return solver.norm(d);
}

double path_speed(const Manifold& m, const PathOfLoops& path) {
  if (path.nodes.empty()) throw LoopError("empty path");
  if (path.nodes.size() == 1) return 0.0;
  const double ds = 1.0 / static_cast<double>(path.nodes.size() - 1);
  double speed = 0.0;
  for (std::size_t j = 0; j + 1 < path.nodes.size(); ++j)
    speed = std::max(speed, loop_difference_norm(m, path.nodes[j], path.nodes[j + 1]) / ds);
  return speed;
}

double loop_set_distance(const Manifold& m, const Loop& a, const Loop& b) {
  if (a.size() != b.size()) throw LoopError("loops must share N");
  double d = 0.0;
  for (int i = 0; i < a.size(); ++i) d = std::max(d, m.chart_distance(a.point(i), b.point(i)));
  return d;
}

Eigen::VectorXi homotopy_class(const Manifold& m, const Loop& loop) {
  if (!m.is_chart())
    throw LoopError("homotopy classes are only tracked on periodic charts (embedded loops are contractible sweeps)");
  return loop.winding;
}

Loop constant_loop(const Vec& x, double period, int n) {
  Loop l;
  l.samples = Eigen::MatrixXd(x.size(), n);
  for (int i = 0; i < n; ++i) l.samples.col(i) = x;
  l.period = period;
  l.winding = Eigen::VectorXi::Zero(x.size());
  return l;
}

Loop sample_loop(const std::function<Vec(double)>& f, double period, int n, Eigen::VectorXi winding) {
  Loop l;
  const Vec first = f(0.0);
  l.samples = Eigen::MatrixXd(first.size(), n);
  l.samples.col(0) = first;
  for (int i = 1; i < n; ++i) l.samples.col(i) = f(static_cast<double>(i) / n);
  l.period = period;
  l.winding = winding.size() ? std::move(winding) : Eigen::VectorXi::Zero(first.size());
  return l;
}

Loop circle_loop(const Vec& center, double radius, int a, int b, int orientation, double period, int n) {
  return sample_loop(
      [&](double t) {
        Vec p = center;
        const double ang = 2.0 * std::numbers::pi * orientation * t;
        p[a] += radius * std::cos(ang);
        p[b] += radius * std::sin(ang);
        return p;
      },
      period, n);
}

Loop resample(const Manifold& m, const Loop& loop, int n) {
  const int N = loop.size();
  const int d = loop.coord_dim();
  const Vec off = lift_offset(m, loop);
  // periodic part y_i = x_i − (i/N) off
  std::vector<std::vector<std::complex<double>>> coef(static_cast<std::size_t>(d),
                                                      std::vector<std::complex<double>>(static_cast<std::size_t>(N)));
  for (int c = 0; c < d; ++c)
    for (int k = 0; k < N; ++k) {
      std::complex<double> s = 0.0;
      for (int i = 0; i < N; ++i) {
        const double y = loop.samples(c, i) - off[c] * i / N;
        s += y * std::polar(1.0, -2.0 * std::numbers::pi * k * i / N);
      }
      coef[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)] = s / static_cast<double>(N);
    }
  Loop out;
  out.samples.resize(d, n);
  out.period = loop.period;
  out.winding = loop.winding;
  for (int j = 0; j < n; ++j) {
    const double t = static_cast<double>(j) / n;
    for (int c = 0; c < d; ++c) {
      double y = 0.0;
      for (int k = 0; k < N; ++k) {
        const int freq = k <= N / 2 ? k : k - N;
        const auto& ck = coef[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)];
        // the Nyquist mode is split symmetrically, which leaves only its cosine part
        if (N % 2 == 0 && k == N / 2)
          y += std::real(ck) * std::cos(2.0 * std::numbers::pi * freq * t);
        else
          y += std::real(ck * std::polar(1.0, 2.0 * std::numbers::pi * freq * t));
      }
      out.samples(c, j) = y + off[c] * t;
    }
    if (!m.is_chart()) out.samples.col(j) = m.project(out.point(j));
  }
  return out;
}

Loop rotate_samples(const Manifold& m, const Loop& loop, int shift) {
  const int n = loop.size();
  shift = ((shift % n) + n) % n;
  const Vec off = lift_offset(m, loop);
  Loop out = loop;
  for (int j = 0; j < n; ++j) {
    const int src = j + shift;
    out.samples.col(j) = src < n ? Vec(loop.samples.col(src)) : Vec(Vec(loop.samples.col(src - n)) + off);
  }
  return out;
}

}  // namespace varorbit
