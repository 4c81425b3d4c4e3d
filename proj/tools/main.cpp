#include "commands.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace varorbit;

int main(int argc, char** argv) {
  CLI::App app{"Periodic orbits of electromagnetic Lagrangians by minimax on the free loop space"};
  app.set_version_flag("--version", std::string(VARORBIT_VERSION));
  app.require_subcommand(1);

  std::string scenario;
  std::optional<std::uint64_t> seed;
  int jobs = 1;

  cli::FindOrbitArgs fo;
  auto* find = app.add_subcommand("find-orbit", "Find a periodic orbit of energy k and certify it");
  find->add_option("scenario", scenario, "Scenario file")->required();
  find->add_option("--k", fo.k, "Energy (default: k of the scenario)");
  find->add_option("--method", fo.method, "Variational method")
      ->check(CLI::IsMember({"mountain-pass", "sweepout", "class-min"}))
      ->capture_default_str();
  find->add_option("--class", fo.klass, "Winding numbers over the periodic coordinates, e.g. 1 or 1,0");
  find->add_option("--cu", fo.cu, "Estimate of c_u used by sweepout and class-min")->capture_default_str();
  find->add_option("--out", fo.out, "Output directory (default: [output].dir)");
  find->add_option("--seed", seed, "Override the scenario seed");
  find->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  cli::ScanArgs sc;
  auto* scan = app.add_subcommand("scan", "Mountain-pass levels on an energy grid with the monotonicity check");
  scan->add_option("scenario", scenario, "Scenario file")->required();
  scan->add_option("--kmin", sc.k_min, "Lowest energy")->required();
  scan->add_option("--kmax", sc.k_max, "Highest energy")->required();
  scan->add_option("--steps", sc.steps, "Grid points")->check(CLI::Range(3, 10000))->capture_default_str();
  scan->add_option("--out", sc.out, "Output directory (default: [output].dir)");
  scan->add_option("--seed", seed, "Override the scenario seed");
  scan->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  cli::CuArgs cu;
  auto* est = app.add_subcommand("estimate-cu", "Bracket c_u by searching for loops of negative action");
  est->add_option("scenario", scenario, "Scenario file")->required();
  est->add_option("--kmin", cu.k_min, "Bracket bottom (default: [search].k_min)");
  est->add_option("--kmax", cu.k_max, "Bracket top (default: [search].k_max)");
  est->add_option("--tol", cu.tol, "Bracket width (default: [search].tol)");
  est->add_option("--out", cu.out, "Output directory (default: [output].dir)");
  est->add_option("--seed", seed, "Override the scenario seed");

  cli::BarrierArgs ba;
  auto* bar = app.add_subcommand("barrier", "Action barrier around constant loops in the [barrier] box");
  bar->add_option("scenario", scenario, "Scenario file")->required();
  bar->add_option("--k", ba.k, "Energy (default: k of the scenario)");
  bar->add_option("--out", ba.out, "Output directory (default: [output].dir)");

  std::string cert;
  auto* ver = app.add_subcommand("verify", "Re-certify a certificate file and diff every field");
  ver->add_option("certificate", cert, "certificate.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kInvalid;
  }

  if (find->parsed()) {
    fo.seed = seed;
    fo.jobs = jobs;
    return cli::find_orbit(scenario, fo, std::cout, std::cerr);
  }
  if (scan->parsed()) {
    sc.seed = seed;
    sc.jobs = jobs;
    return cli::scan(scenario, sc, std::cout, std::cerr);
  }
  if (est->parsed()) {
    cu.seed = seed;
    return cli::estimate_cu(scenario, cu, std::cout, std::cerr);
  }
  if (bar->parsed()) return cli::barrier(scenario, ba, std::cout, std::cerr);
  return cli::verify(cert, std::cout, std::cerr);
}
