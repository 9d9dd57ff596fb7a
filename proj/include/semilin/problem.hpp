#pragma once

// A complete problem instance: domain, reaction F(x, u), bound U(x),
// boundary data phi(y), the bound b of F's u-domain, and run settings.
// Problem files are JSON with a strict schema; see README.md.

#include "semilin/diagnostics.hpp"
#include "semilin/expr.hpp"
#include "semilin/geometry.hpp"
#include "semilin/linear.hpp"
#include "semilin/sampling.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace semilin {

struct SolverSettings {
  double grid_h = 0.0;
  std::size_t paths = 2000;
  double paths_growth = 1.0;        // per-iteration factor on the path count
  std::size_t paths_max = 0;        // cap for the growth schedule
  double dt = 0.0;
  bool bridge_correction = false;
  double shell = 0.0;               // walk-on-spheres epsilon
  double tol = 0.01;
  int max_iter = 30;
  std::uint64_t seed = 1;
  double quadrature_h = 0.0;        // Green-tight norm of U
  std::size_t boundary_samples = 10000;
  double safety = 0.0;              // relative widening of the sampled gamma0 and sup phi
  ExitMethod method = ExitMethod::WalkOnSpheres;  // harmonic extensions in `linear`

  SamplerOptions sampler() const;
};

struct SequenceSettings {
  std::vector<Point> targets;       // empty: generated from the discontinuity set and axis points
  int count = 10;                   // generated targets when none are given
  ApproachSettings approach;
  int tail = 4;
};

struct DiagnosticsSettings {
  DiscontinuitySet discontinuity_set;
  SequenceSettings sequences;
  double control_exponent = 1.0;
  double control_cap = 1e6;
  double k_threshold = 1e3;
  double tolerance = 0.05;
  std::size_t paths = 4000;
  double shell = 0.0;
  std::vector<BumpFunction> bumps;  // weak-residual test functions
  double kato_alpha = 0.0;
  int kato_levels = 5;
};

struct Problem {
  int dimension = 3;
  Domain domain = Domain::ball(Point::Zero(3), 1.0);
  Expr F;
  Expr U;
  Expr phi;
  double b = std::numeric_limits<double>::infinity();
  std::optional<Expr> analytic_reference;
  SolverSettings solver;
  DiagnosticsSettings diagnostics;

  ScalarField phi_field() const;
  ScalarField U_field() const;
};

/// Parses and validates the schema of a JSON problem document. Unknown keys,
/// missing required keys and wrong types raise InputError naming the key path.
Problem parse_problem(const std::string& json_text);
Problem load_problem(const std::filesystem::path& path);

/// Canonical JSON with every default written out; parse_problem(save) == problem.
std::string save_problem(const Problem& problem);

/// F(x, u) as a Reaction, for weak residuals of the semilinear equation.
Reaction problem_reaction(const Problem& problem);

}  // namespace semilin
