#include "varorbit/shrink.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace varorbit {

RadialProfile smooth_radial_profile(double r0, double r1, double s_inf) {
  if (!(0.0 < r0 && r0 < r1)) throw ShrinkError("profile radii must satisfy 0 < r0 < r1");
  if (!(s_inf > 0.0 && s_inf < 1.0)) throw ShrinkError("asymptotic slope must lie in (0, 1)");
  const double w = r1 - r0, c = 1.0 - s_inf;
  // H(u) = ∫₀ᵘ h with h(u) = 6u⁵ − 15u⁴ + 10u³, so H(1) = ½
  auto H = [](double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 0.5 + (u - 1.0);
    return u * u * u * u * (u * u - 3.0 * u + 2.5);
  };
  RadialProfile p;
  p.f = [=](double r) { return r - c * w * H((r - r0) / w); };
  p.df = [=](double r) { return 1.0 - c * smoothstep5((r - r0) / w).h; };
  p.ddf = [=](double r) { return -c * smoothstep5((r - r0) / w).dh / w; };
  return p;
}

double ShrinkMap::radius(const Vec& x) const {
  double s = 0.0;
  for (int i : radial) s += x[i] * x[i];
  return std::sqrt(s);
}

Vec ShrinkMap::apply(const Vec& x) const {
  const double r = radius(x);
  if (r <= r0) return x;
  const double scale = profile.f(r) / r;
  Vec y = x;
  for (int i : radial) y[i] *= scale;
  return y;
}

Mat ShrinkMap::jacobian(const Vec& x) const {
  const int n = static_cast<int>(x.size());
  Mat J = Mat::Identity(n, n);
  const double r = radius(x);
  if (r <= r0) return J;
  const double a = profile.f(r) / r;
  const double b = profile.df(r) - a;
  for (int i : radial)
    for (int j : radial) J(i, j) = (i == j ? a : 0.0) + b * x[i] * x[j] / (r * r);
  return J;
}

namespace {

std::vector<int> radial_coordinates(const Manifold& m) {
  if (!m.is_chart()) throw ShrinkError("radial shrink maps need a periodic chart");
  std::vector<int> out;
  for (int i = 0; i < m.coord_dim(); ++i)
    if (!(m.periods()[i] > 0.0)) out.push_back(i);
  if (out.empty()) throw ShrinkError("manifold has no Euclidean factor to shrink");
  return out;
}

}  // namespace

ShrinkMap build_profile_shrink(const Manifold& m, RadialProfile profile, double r0, double r1, double r2) {
  if (!(0.0 < r0 && r0 < r1 && r1 < r2)) throw ShrinkError("shrink radii must satisfy 0 < r0 < r1 < r2");
  ShrinkMap s;
  s.radial = radial_coordinates(m);
  s.r0 = r0;
  s.r1 = r1;
  s.r2 = r2;
  const int grid = 2000;
  for (int i = 0; i <= grid; ++i) {
    const double r = 2.0 * r2 * i / grid;
    const double fp = profile.df(r);
    std::ostringstream os;
    if (r <= r0 && std::abs(profile.f(r) - r) > 1e-12 * std::max(1.0, r))
      os << "profile is not the identity at r = " << r;
    else if (!(fp > 0.0 && fp <= 1.0 + 1e-12))
      os << "profile slope " << fp << " outside (0, 1] at r = " << r;
    else if (r >= r1 && !(fp < 1.0))
      os << "profile slope must be below 1 beyond r1 (r = " << r << ")";
    if (!os.str().empty()) throw ShrinkError(os.str());
  }
  s.epsilon = r2 - profile.f(r2);
  if (!(s.epsilon > 0.0)) throw ShrinkError("collar width r2 − f(r2) must be positive");
  s.profile = std::move(profile);
  return s;
}

ShrinkMap build_radial_shrink(const Manifold& m, double r0, double r1, double r2, double s_inf) {
  if (!(0.0 < r0 && r0 < r1 && r1 < r2)) throw ShrinkError("shrink radii must satisfy 0 < r0 < r1 < r2");
  return build_profile_shrink(m, smooth_radial_profile(r0, r1, s_inf), r0, r1, r2);
}

ShrinkReport verify_shrink_inequality(const ShrinkMap& s, const Lagrangian& L, const std::vector<ShrinkSample>& samples) {
  ShrinkReport rep;
  for (const auto& smp : samples) {
    if (!s.in_K(smp.x)) {
      std::ostringstream os;
      os << "shrink sample outside K (radius " << s.radius(smp.x) << " > " << s.r2 << ")";
      throw ShrinkError(os.str());
    }
    const double lhs = L.value(s.apply(smp.x), Vec(s.jacobian(smp.x) * smp.v));
    const double diff = lhs - L.value(smp.x, smp.v);
    if (diff > rep.max_violation) {
      rep.max_violation = diff;
      rep.worst_x = smp.x;
      rep.worst_v = smp.v;
    }
    ++rep.samples;
  }
  return rep;
}

ShrinkReport verify_shrink_inequality(const ShrinkMap& s, const Lagrangian& L, int count, double vmax,
                                      std::uint64_t seed, const std::optional<Box>& others) {
  if (count < 1 || !(vmax > 0.0)) throw ShrinkError("need a positive sample count and speed bound");
  const Manifold& m = L.manifold();
  const int n = m.coord_dim();
  const int k = static_cast<int>(s.radial.size());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> uni;
  std::vector<ShrinkSample> samples;
  samples.reserve(static_cast<std::size_t>(count));
  for (int c = 0; c < count; ++c) {
    Vec x(n);
    for (int i = 0; i < n; ++i) {
      const double per = m.periods()[i];
      if (others) x[i] = others->lo[i] + uni(rng) * (others->hi[i] - others->lo[i]);
      else x[i] = per > 0.0 ? per * uni(rng) : 0.0;
    }
    // uniform in the k-ball of radius r2
    Vec dir(k);
    for (int j = 0; j < k; ++j) dir[j] = nd(rng);
    dir.normalize();
    const double rad = s.r2 * std::pow(uni(rng), 1.0 / k);
    for (int j = 0; j < k; ++j) x[s.radial[static_cast<std::size_t>(j)]] = rad * dir[j];
    // metric-uniform direction, speed uniform in [0, vmax]
    Vec w(n);
    for (int i = 0; i < n; ++i) w[i] = nd(rng);
    const double nw = m.norm(x, w);
    samples.push_back({x, Vec(w * (vmax * uni(rng) / nw))});
  }
  return verify_shrink_inequality(s, L, samples);
}

Loop pushback(const ShrinkMap& s, const Loop& loop) {
  Loop out = loop;
  for (int i = 0; i < loop.size(); ++i) {
    const Vec x = loop.point(i);
    if (!s.in_K(x)) {
      std::ostringstream os;
      os << "loop sample " << i << " is outside the confinement set K (radius " << s.radius(x) << " > " << s.r2
         << ")";
      throw ShrinkError(os.str());
    }
    out.samples.col(i) = s.apply(x);
  }
  return out;
}

}  // namespace varorbit
