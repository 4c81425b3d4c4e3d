#include "varorbit/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace varorbit {

namespace {

Json winding_json(const Eigen::VectorXi& w) {
  Json a = Json::array();
  for (int i = 0; i < w.size(); ++i) a.push_back(w[i]);
  return a;
}

Eigen::VectorXi winding_from(const Json& j) {
  Eigen::VectorXi w(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) w[static_cast<int>(i)] = j[i].get<int>();
  return w;
}

}  // namespace

Json loop_to_json(const Loop& loop) {
  Json j;
  j["N"] = loop.size();
  j["T"] = loop.period;
  j["winding"] = winding_json(loop.winding);
  Json s = Json::array();
  for (int i = 0; i < loop.size(); ++i) {
    Json p = Json::array();
    for (int r = 0; r < loop.coord_dim(); ++r) p.push_back(loop.samples(r, i));
    s.push_back(std::move(p));
  }
  j["samples"] = std::move(s);
  return j;
}

Loop loop_from_json(const Json& j) {
  Loop l;
  const auto& s = j.at("samples");
  const int n = j.at("N").get<int>();
  if (static_cast<int>(s.size()) != n || n == 0) throw std::runtime_error("loop JSON: N does not match the samples");
  const int d = static_cast<int>(s.at(0).size());
  l.samples.resize(d, n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(s[static_cast<std::size_t>(i)].size()) != d) throw std::runtime_error("loop JSON: ragged samples");
    for (int r = 0; r < d; ++r) l.samples(r, i) = s[static_cast<std::size_t>(i)][static_cast<std::size_t>(r)].get<double>();
  }
  l.period = j.at("T").get<double>();
  l.winding = winding_from(j.at("winding"));
  return l;
}

Json record_to_json(const PSRecord& rec) {
  Json j;
  j["verdict"] = to_string(rec.verdict);
  j["dissipated"] = rec.dissipated;
  j["escaped_sample"] = rec.escaped_sample;
  Json steps = Json::array();
  for (const PSStep& s : rec.steps)
    steps.push_back({{"time", s.time}, {"action", s.action}, {"grad_norm", s.grad_norm}, {"T", s.period},
                     {"excursion", s.excursion}});
  j["steps"] = std::move(steps);
  return j;
}

Json certificate_to_json(const OrbitCertificate& c) {
  Json j;
  j["method"] = to_string(c.method);
  j["k"] = c.k;
  j["pass"] = c.pass;
  j["action"] = c.action;
  j["el_residual"] = c.el_residual;
  j["energy_dev"] = c.energy_dev;
  j["closure_err"] = c.closure_err;
  j["energy_drift"] = c.energy_drift;
  j["length"] = c.length;
  j["period"] = c.loop.period;
  j["class"] = winding_json(c.homotopy);
  j["tolerances"] = {{"el_residual", c.tolerances.el_residual},
                     {"energy_dev", c.tolerances.energy_dev},
                     {"closure", c.tolerances.closure},
                     {"shooting_steps", c.tolerances.shooting_steps}};
  j["failures"] = c.failures;
  j["loop"] = loop_to_json(c.loop);
  return j;
}

OrbitCertificate certificate_from_json(const Json& j) {
  OrbitCertificate c;
  c.method = orbit_method_from_string(j.at("method").get<std::string>());
  c.k = j.at("k").get<double>();
  c.pass = j.at("pass").get<bool>();
  c.action = j.at("action").get<double>();
  c.el_residual = j.at("el_residual").get<double>();
  c.energy_dev = j.at("energy_dev").get<double>();
  c.closure_err = j.at("closure_err").get<double>();
  c.energy_drift = j.at("energy_drift").get<double>();
  c.length = j.at("length").get<double>();
  c.homotopy = winding_from(j.at("class"));
  const auto& t = j.at("tolerances");
  c.tolerances.el_residual = t.at("el_residual").get<double>();
  c.tolerances.energy_dev = t.at("energy_dev").get<double>();
  c.tolerances.closure = t.at("closure").get<double>();
  c.tolerances.shooting_steps = t.at("shooting_steps").get<int>();
  c.failures = j.at("failures").get<std::vector<std::string>>();
  c.loop = loop_from_json(j.at("loop"));
  return c;
}

Json result_to_json(const MinimaxResult& r) {
  Json j;
  j["family_kind"] = to_string(r.family_kind);
  j["k"] = r.k;
  j["level"] = r.level;
  j["string_level"] = r.string_level;
  j["converged"] = r.converged;
  j["classification"] = {{"verdict", to_string(r.classification.verdict)},
                         {"consistent", r.classification.consistent},
                         {"note", r.classification.note}};
  j["sweeps"] = r.sweeps;
  j["morse_index"] = r.morse_index;
  j["nullity"] = r.nullity;
  j["pushbacks"] = r.pushbacks;
  j["pushback_violations"] = r.pushback_violations;
  if (r.family_kind == FamilyKind::Sweepout) {
    j["family_length"] = r.family_length;
    j["initial_minimax_length"] = r.initial_minimax_length;
    j["period_bound"] = r.period_bound;
    j["level_bound"] = r.level_bound;
  }
  if (r.drift) {
    j["drift"] = {{"coordinate", r.drift->coordinate}, {"side", r.drift->side},    {"mean", r.drift->mean},
                  {"extreme", r.drift->extreme},       {"monotone", r.drift->monotone}, {"note", r.drift->note}};
  }
  // Numerical minimax values bound the true inf-sup from above only.
  j["one_sided"] = r.family_kind != FamilyKind::ClassMin;
  j["log"] = r.log;
  j["ps"] = record_to_json(r.ps);
  if (r.argmax.size() > 0) j["argmax"] = loop_to_json(r.argmax);
  return j;
}

Json barrier_to_json(const BarrierEstimate& b) {
  return {{"A1", b.A1},         {"e0", b.e0}, {"mu", b.mu}, {"mu_min", b.mu_min}, {"mu_max", b.mu_max},
          {"lebesgue_delta", b.lebesgue_delta}, {"d", b.d},   {"r", b.r},   {"a", b.a},           {"balls", b.balls}};
}

Json cu_to_json(const CriticalValueEstimate& e) {
  Json j;
  j["value"] = e.value;
  j["bracket"] = {e.lo, e.hi};
  j["unbounded_suspected"] = e.unbounded_suspected;
  j["below_bracket"] = e.below_bracket;
  j["evaluations"] = e.evaluations;
  Json w = Json::array();
  for (const CuWitness& x : e.witnesses) w.push_back({{"k", x.k}, {"action", x.action}, {"loop", loop_to_json(x.loop)}});
  j["witnesses"] = std::move(w);
  j["failures"] = e.failures;
  j["log"] = e.log;
  return j;
}

void write_loop_csv(std::ostream& os, const Lagrangian& L, const Loop& loop) {
  const Manifold& m = L.manifold();
  const Eigen::MatrixXd v = sample_velocities(m, loop, 6);
  os << "# varorbit loop csv v" << kCsvVersion << "\n";
  os << "t";
  for (const auto& name : m.coordinate_names()) os << "," << name;
  os << ",speed,energy\n";
  os << std::setprecision(17);
  for (int i = 0; i < loop.size(); ++i) {
    const Vec x = loop.point(i), xd = v.col(i);
    os << loop.period * i / loop.size();
    for (int r = 0; r < loop.coord_dim(); ++r) os << "," << x[r];
    os << "," << m.norm(x, xd) << "," << L.energy(x, xd) << "\n";
  }
}

void write_ps_csv(std::ostream& os, const PSRecord& rec) {
  os << "# varorbit ps csv v" << kCsvVersion << "\n";
  os << "iteration,action,grad_norm,T,excursion\n" << std::setprecision(17);
  for (std::size_t i = 0; i < rec.steps.size(); ++i) {
    const PSStep& s = rec.steps[i];
    os << i << "," << s.action << "," << s.grad_norm << "," << s.period << "," << s.excursion << "\n";
  }
}

void write_scan_csv(std::ostream& os, const StruweScan& scan) {
  os << "# varorbit scan csv v" << kCsvVersion << "\n";
  os << "k,level,quotient,refined,converged,T,pass,el_residual,energy_dev,closure_err\n" << std::setprecision(17);
  for (const StruweRow& r : scan.rows) {
    os << r.k << "," << r.level << "," << r.quotient << "," << r.refined << "," << r.converged << "," << r.period << ","
       << r.pass;
    if (r.result.certificate)
      os << "," << r.result.certificate->el_residual << "," << r.result.certificate->energy_dev << ","
         << r.result.certificate->closure_err;
    else
      os << ",,,";
    os << "\n";
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot rename " + tmp.string() + ": " + ec.message());
  }
}

}  // namespace varorbit
