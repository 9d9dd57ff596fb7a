#include "semilin/cli.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo solver for semilinear elliptic Dirichlet problems"};
  app.set_version_flag("--version", semilin::kToolVersion);
  app.require_subcommand(1);

  semilin::RunConfig cfg;
  std::uint64_t seed = 0;
  double grid_h = 0.0, dt = 0.0, tol = 0.0;
  std::size_t paths = 0;
  int max_iter = 0;
  std::string field;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--problem", cfg.problem, "problem file (JSON)")->required();
    sub->add_option("--out", cfg.out, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "master seed (overrides solver.seed)");
    sub->add_option("--threads", cfg.threads, "worker threads (default: hardware concurrency)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--grid-h", grid_h, "interior grid spacing")->check(CLI::PositiveNumber);
    sub->add_option("--paths", paths, "paths per grid point")->check(CLI::Range(2ul, 1ul << 40));
    sub->add_option("--dt", dt, "Euler-Maruyama time step")->check(CLI::PositiveNumber);
    sub->add_option("--tol", tol, "Picard stopping tolerance")->check(CLI::NonNegativeNumber);
    sub->add_option("--max-iter", max_iter, "Picard iteration cap")->check(CLI::PositiveNumber);
    sub->add_flag("--force", cfg.force, "solve even if the contraction condition fails");
  };
  add_common(app.add_subcommand("validate", "audit the standing hypotheses and contraction condition"));
  add_common(app.add_subcommand("solve", "Picard iteration for the semilinear problem"));
  add_common(app.add_subcommand("linear", "harmonic extension of phi and Green potential of U"));
  auto* diag = app.add_subcommand("diagnose", "controlled convergence, weak residuals, Green-tight/Kato profiles");
  add_common(diag);
  diag->add_option("--field", field, "solved field CSV (default: solve first)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : semilin::kExitInput;
  }

  for (auto* sub : app.get_subcommands()) {
    cfg.subcommand = sub->get_name();
    if (sub->count("--seed")) cfg.seed = seed;
    if (sub->count("--grid-h")) cfg.grid_h = grid_h;
    if (sub->count("--paths")) cfg.paths = paths;
    if (sub->count("--dt")) cfg.dt = dt;
    if (sub->count("--tol")) cfg.tol = tol;
    if (sub->count("--max-iter")) cfg.max_iter = max_iter;
    if (sub == diag && sub->count("--field")) cfg.field = field;
  }
  return semilin::run(cfg, std::cerr);
}
