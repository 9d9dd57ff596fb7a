#pragma once

// Brownian exit experiments for the generator (1/2)Laplacian.
//
// wos_exit    walk-on-spheres; exact exit law up to the epsilon shell, no time.
// em_path     Euler-Maruyama, X_{k+1} = X_k + sqrt(dt) Z_k; carries the exit
//             time and left-endpoint occupation integrals of registered
//             integrands. Exit is the first step with sd >= 0, optionally
//             preceded by a Brownian-bridge crossing test between steps.

#include "semilin/geometry.hpp"
#include "semilin/rng.hpp"
#include "semilin/types.hpp"

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace semilin {

struct SamplerOptions {
  double shell = 0.0;               // walk-on-spheres epsilon
  double dt = 0.0;                  // Euler-Maruyama step
  bool bridge_correction = false;   // Brownian-bridge crossing test
  std::size_t step_cap = 1'000'000;

  /// shell = 1e-4 R, dt = 1e-4 R^2 (so sqrt(dt) = 1e-2 R), cap 1e6.
  static SamplerOptions defaults_for(const Domain& domain);
};

struct ExitSample {
  Point exit_point;
  std::size_t steps = 0;
};

struct LabeledIntegrand {
  std::string label;
  ScalarField w;
};

struct PathSample {
  Point exit_point;
  double exit_time = 0.0;
  std::size_t steps = 0;
  std::vector<std::pair<std::string, double>> occupation;

  double occupation_integral(const std::string& label) const;
};

ExitSample wos_exit(const Domain& domain, const Point& x, double shell, RngStream& rng,
                    std::size_t step_cap = 1'000'000);

PathSample em_path(const Domain& domain, const Point& x, const SamplerOptions& opts,
                   const std::vector<LabeledIntegrand>& integrands, RngStream& rng);

/// exp of the occupation integral registered under `label`.
double feynman_kac_weight(const PathSample& sample, const std::string& label);

/// Points on the boundary: uniform on spheres and box faces; walk-on-spheres
/// exits from random interior points for implicit shapes.
PointSet sample_boundary(const Domain& domain, std::size_t n, const StreamFamily& rng);

/// Uniform points in the domain (rejection from the bounding box).
PointSet sample_interior(const Domain& domain, std::size_t n, const StreamFamily& rng);

}  // namespace semilin
