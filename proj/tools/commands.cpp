#include "commands.hpp"

#include "varorbit/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace varorbit::cli {

namespace fs = std::filesystem;

namespace {

struct Loaded {
  Scenario s;
  std::string text;
};

// Missing files and invalid scenarios both map to exit 2.
std::optional<Loaded> load(const fs::path& path, std::ostream& err) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    err << "error: cannot open " << path.string() << "\n";
    return std::nullopt;
  }
  std::ostringstream os;
  os << in.rdbuf();
  try {
    return Loaded{parse_scenario(os.str()), os.str()};
  } catch (const ScenarioError& e) {
    err << path.string() << ":" << e.what() << "\n";
  } catch (const std::exception& e) {
    err << path.string() << ": " << e.what() << "\n";
  }
  return std::nullopt;
}

class NoWitness : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void stamp(Json& j, const Scenario& s, std::uint64_t seed) {
  j["tool"] = "varorbit";
  j["version"] = VARORBIT_VERSION;
  j["scenario_name"] = s.name;
  j["seed"] = seed;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

fs::path out_dir(const Scenario& s, const fs::path& out) { return out.empty() ? fs::path(s.output_dir) : out; }

template <class F>
int guarded(std::ostream& err, F&& f) {
  try {
    return f();
  } catch (const ScenarioError& e) {
    err << "invalid scenario: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailed;
  }
}

}  // namespace

MountainPassProblem mountain_pass_problem(const Scenario& s, double k, std::uint64_t seed) {
  if (!s.search_region) throw ScenarioError("[search]: mountain-pass needs 'lo' and 'hi'");
  SearchBudget b;
  b.n = s.n;
  b.seed = seed;
  const NegativeLoopSearch neg = find_negative_action_loop(s.L(), k, *s.search_region, b);
  if (!neg.witness) {
    std::ostringstream os;
    os << "no loop of negative action at k = " << k << " in the search box (best " << neg.best_action
       << "); k is probably below c_u";
    throw NoWitness(os.str());
  }
  MountainPassProblem p{s.L(), k};
  p.family = contraction_family(*s.manifold, *neg.witness, s.pole_period, s.nodes);
  p.confinement = s.shrink;
  p.flow.tau = s.tau;
  p.gradient_tol = s.gradient_tol.value_or(p.gradient_tol);
  p.level_tol = s.level_tol;
  return p;
}

Eigen::VectorXi parse_class(const Manifold& m, const std::string& text) {
  std::vector<int> periodic;
  for (int i = 0; i < m.coord_dim(); ++i)
    if (m.is_chart() && m.periods()[i] > 0.0) periodic.push_back(i);
  std::vector<int> values;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw ScenarioError("--class: '" + item + "' is not an integer");
    values.push_back(v);
  }
  if (values.size() != periodic.size() || values.empty())
    throw ScenarioError("--class: expected " + std::to_string(periodic.size()) +
                        " winding number(s), one per periodic coordinate");
  Eigen::VectorXi w = Eigen::VectorXi::Zero(m.coord_dim());
  for (std::size_t i = 0; i < periodic.size(); ++i) w[periodic[i]] = values[i];
  return w;
}

int find_orbit(const fs::path& scenario, const FindOrbitArgs& a, std::ostream& log, std::ostream& err) {
  auto loaded = load(scenario, err);
  if (!loaded) return kInvalid;
  const Scenario& s = loaded->s;
  return guarded(err, [&]() -> int {
    if (!a.k && !s.k) throw ScenarioError("no energy: pass --k or set k in the scenario");
    const double k = a.k ? *a.k : *s.k;
    const std::uint64_t seed = a.seed.value_or(s.seed);
    MinimaxOptions opt = s.minimax_options();

    MinimaxResult r;
    if (a.method == "mountain-pass") {
      std::optional<MountainPassProblem> p;
      try {
        p = mountain_pass_problem(s, k, seed);
      } catch (const NoWitness& e) {
        err << e.what() << "\n";
        return kFailed;
      }
      r = mountain_pass(*p, opt);
    } else if (a.method == "sweepout") {
      const PathOfLoops sweep =
          latitude_sweepout(s.L(), k, s.nodes, s.n, s.pole_period, s.sweep_axis, s.sweep_wobble);
      r = sweepout_minimax(s.L(), k, sweep, a.cu, opt);
    } else if (a.method == "class-min") {
      if (a.klass.empty()) throw ScenarioError("class-min needs --class");
      const Eigen::VectorXi w = parse_class(*s.manifold, a.klass);
      ClassMinOptions o;
      o.starts = s.class_starts;
      o.chunks = s.class_chunks;
      o.chunk_time = s.class_chunk_time;
      o.drift_box = s.drift_box;
      o.refine_n = s.refine_n;
      if (s.gradient_tol) o.gradient_tol = *s.gradient_tol;
      o.cu_estimate = a.cu;
      o.seed = seed;
      o.jobs = a.jobs;
      o.certificate = s.tolerances;
      r = class_minimize(s.L(), k, w, s.class_seed_loop(w), o);
    } else {
      throw ScenarioError("--method must be mountain-pass, sweepout or class-min");
    }

    const fs::path dir = out_dir(s, a.out);
    Json rj = result_to_json(r);
    stamp(rj, s, seed);
    write_file_atomic(dir / "result.json", dump(rj));
    {
      std::ostringstream os;
      write_ps_csv(os, r.ps);
      write_file_atomic(dir / "ps.csv", os.str());
    }
    if (r.argmax.size() > 0) {
      std::ostringstream os;
      write_loop_csv(os, s.L(), r.argmax);
      write_file_atomic(dir / "loop.csv", os.str());
    }
    if (r.certificate) {
      Json cj = certificate_to_json(*r.certificate);
      stamp(cj, s, seed);
      cj["scenario"] = loaded->text;
      write_file_atomic(dir / "certificate.json", dump(cj));
    }

    log << std::setprecision(10) << s.name << " " << a.method << " k=" << k << ": level " << r.level;
    if (r.argmax.size() > 0) log << ", T " << r.argmax.period;
    log << ", " << to_string(r.classification.verdict) << "\n";
    if (r.drift) log << "drift: " << r.drift->note << (r.drift->monotone ? " (monotone)" : "") << "\n";
    if (r.certificate) {
      const auto& c = *r.certificate;
      log << "certificate " << (c.pass ? "PASS" : "FAIL") << ": el_residual " << c.el_residual << ", energy_dev "
          << c.energy_dev << ", closure_err " << c.closure_err << ", length " << c.length << "\n";
      for (const auto& f : c.failures) log << "  violated: " << f << "\n";
    }
    log << "wrote " << dir.string() << "\n";
    return r.certificate && r.certificate->pass ? kOk : kFailed;
  });
}

int scan(const fs::path& scenario, const ScanArgs& a, std::ostream& log, std::ostream& err) {
  auto loaded = load(scenario, err);
  if (!loaded) return kInvalid;
  const Scenario& s = loaded->s;
  return guarded(err, [&]() -> int {
    if (!(a.k_min < a.k_max)) throw ScenarioError("scan needs --kmin < --kmax");
    if (a.steps < 3) throw ScenarioError("scan needs --steps >= 3");
    if (!s.search_region) throw ScenarioError("[search]: scan needs 'lo' and 'hi'");
    const std::uint64_t seed = a.seed.value_or(s.seed);
    const StruweScan sc = struwe_scan([&](double k) { return mountain_pass_problem(s, k, seed); }, a.k_min, a.k_max,
                                      a.steps, s.minimax_options(), a.jobs);
    std::ostringstream os;
    write_scan_csv(os, sc);
    const fs::path dir = out_dir(s, a.out);
    write_file_atomic(dir / "scan.csv", os.str());
    log << std::setprecision(10) << "D = " << sc.D << ", D2 = " << sc.D2 << ", tau = " << sc.tau << "\n";
    for (const StruweRow& r : sc.rows)
      log << "k " << r.k << "  c(k) " << r.level << "  T " << r.period << (r.refined ? "  refined" : "")
          << (r.pass ? "  PASS" : "  FAIL") << "\n";
    log << (sc.monotone ? "monotone" : "NOT monotone") << " (largest drop " << sc.max_drop << ")\n";
    log << "wrote " << (dir / "scan.csv").string() << "\n";
    return sc.monotone ? kOk : kFailed;
  });
}

int estimate_cu(const fs::path& scenario, const CuArgs& a, std::ostream& log, std::ostream& err) {
  auto loaded = load(scenario, err);
  if (!loaded) return kInvalid;
  const Scenario& s = loaded->s;
  return guarded(err, [&]() -> int {
    if (!s.search_region) throw ScenarioError("[search]: estimate-cu needs 'lo' and 'hi'");
    const std::uint64_t seed = a.seed.value_or(s.seed);
    SearchBudget b;
    b.n = s.n;
    b.seed = seed;
    const double lo = a.k_min.value_or(s.k_min), hi = a.k_max.value_or(s.k_max);
    if (!(lo < hi)) throw ScenarioError("estimate-cu needs k_min < k_max");
    const CriticalValueEstimate e = varorbit::estimate_cu(s.L(), *s.search_region, lo, hi, a.tol.value_or(s.cu_tol), b);
    Json j = cu_to_json(e);
    stamp(j, s, seed);
    const fs::path dir = out_dir(s, a.out);
    write_file_atomic(dir / "cu.json", dump(j));
    log << std::setprecision(10) << "c_u in [" << e.lo << ", " << e.hi << "], estimate " << e.value;
    if (e.unbounded_suspected) log << " (negative loops at the top of the bracket: c_u may be infinite)";
    if (e.below_bracket) log << " (no negative loop anywhere in the bracket)";
    log << "\nwrote " << (dir / "cu.json").string() << "\n";
    return kOk;
  });
}

int barrier(const fs::path& scenario, const BarrierArgs& a, std::ostream& log, std::ostream& err) {
  auto loaded = load(scenario, err);
  if (!loaded) return kInvalid;
  const Scenario& s = loaded->s;
  return guarded(err, [&]() -> int {
    if (!a.k && !s.k) throw ScenarioError("no energy: pass --k or set k in the scenario");
    if (!s.barrier_box) throw ScenarioError("[barrier]: 'lo' and 'hi' are required");
    const double k = a.k ? *a.k : *s.k;
    const BarrierEstimate b = varorbit::barrier(s.L(), k, *s.barrier_box, s.cover);
    Json j = barrier_to_json(b);
    j["k"] = k;
    stamp(j, s, s.seed);
    const fs::path dir = out_dir(s, a.out);
    write_file_atomic(dir / "barrier.json", dump(j));
    log << std::setprecision(10) << "barrier at k=" << k << ": r " << b.r << ", a " << b.a << " (mu " << b.mu
        << ", A1 " << b.A1 << ", e0 " << b.e0 << ", " << b.balls << " balls)\n";
    log << "wrote " << (dir / "barrier.json").string() << "\n";
    return kOk;
  });
}

int verify(const fs::path& certificate, std::ostream& log, std::ostream& err) {
  std::ifstream in(certificate, std::ios::binary);
  if (!in) {
    err << "error: cannot open " << certificate.string() << "\n";
    return kInvalid;
  }
  Json stored;
  OrbitCertificate c;
  Scenario s;
  try {
    stored = Json::parse(in);
    c = certificate_from_json(stored);
    s = parse_scenario(stored.at("scenario").get<std::string>());
  } catch (const std::exception& e) {
    err << certificate.string() << ": not a certificate: " << e.what() << "\n";
    return kInvalid;
  }
  return guarded(err, [&]() -> int {
    const OrbitCertificate fresh = certify(s.L(), c.k, c.loop, c.method, c.tolerances);
    const Json redo = certificate_to_json(fresh);
    int diffs = 0;
    for (const auto& [key, value] : redo.items()) {
      if (key == "loop") continue;
      const Json& old = stored.at(key);
      bool same = old == value;
      if (!same && old.is_number() && value.is_number()) {
        const double x = old.get<double>(), y = value.get<double>();
        same = std::abs(x - y) <= 1e-9 * std::max(std::abs(x), std::abs(y)) + 1e-15;
      }
      if (!same) {
        ++diffs;
        err << "field " << key << ": stored " << old.dump() << ", recomputed " << value.dump() << "\n";
      }
    }
    log << certificate.string() << ": " << (diffs ? "MISMATCH" : "consistent") << ", certificate "
        << (fresh.pass ? "PASS" : "FAIL") << "\n";
    return diffs == 0 && fresh.pass ? kOk : kFailed;
  });
}

}  // namespace varorbit::cli
