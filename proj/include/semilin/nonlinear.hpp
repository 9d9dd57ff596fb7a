#pragma once

// The order interval Lambda = [m, m~], the operator
//   T u(x) = E^x[exp(int_0^tau q_u(X_s) ds) phi(X_tau)],  q_u = -F(x, u) / u,
// its contraction constant, and the Picard iteration v_{n+1} = T v_n.
// All sup-norms are maxima over the grid points.

#include "semilin/field.hpp"
#include "semilin/parallel.hpp"
#include "semilin/problem.hpp"
#include "semilin/rng.hpp"
#include "semilin/sampling.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace semilin {

struct LambdaSpace {
  double gamma0 = 0.0;       // inf phi over the boundary sample (after safety)
  double phi_sup = 0.0;      // sup |phi| over the boundary sample (after safety)
  double U_norm = 0.0;       // Green-tight norm of U
  double c = 0.0;            // Green constant
  double beta = 0.0;         // c * U_norm
  double m = 0.0;            // exp(-beta) gamma0
  double m_tilde = 0.0;      // phi_sup
  double b = 0.0;
  Point gamma0_witness;
  Point phi_sup_witness;
  std::size_t boundary_samples = 0;
  double safety = 0.0;
  bool quadrature_warning = false;
};

struct LambdaOptions {
  std::size_t boundary_samples = 10000;
  double safety = 0.0;
  double quadrature_h = 0.05;   // absolute spacing
  std::uint64_t seed = 1;
  Exec exec{};
};

LambdaOptions lambda_options(const Problem& problem, Exec exec = {});

/// Throws HypothesisError if gamma0 <= 0 or sup phi >= b.
LambdaSpace lambda_bounds(const Problem& problem, const LambdaOptions& options);

/// max over x in x_points of the Lipschitz constant of y -> F(x, y) / y on
/// [m, m~], from slopes of adjacent nodes of a y-grid refined (16, 32, ...)
/// until two successive estimates agree to 1%. A lower estimate of the sup.
double lipschitz_constant(const Problem& problem, const LambdaSpace& lambda, const PointSet& x_points);

struct ContractionReport {
  double C = 0.0;
  double C_tilde = 0.0;       // sup phi * C * R^2 / d
  bool condition_ok = false;  // sup phi < d / (R^2 C), i.e. C_tilde < 1
  double R = 0.0;
  int d = 3;
};

ContractionReport contraction_report(const Problem& problem, const LambdaSpace& lambda, double C);

/// q_u(x) = -F(x, u~(x)) / u~(x), clamped to [-U(x), 0]; u~ is the
/// nearest-neighbour interpolant of u.
ScalarField q_of(const Field& u, const Problem& problem);

struct TResult {
  Field field;                      // clamped to [m, m~]
  std::size_t clamp_violations = 0; // points whose estimate left [m, m~]
};

class FixedPointMap {
 public:
  /// Throws HypothesisError when the contraction condition fails and `force` is false.
  FixedPointMap(const Problem& problem, LambdaSpace lambda, ContractionReport report, bool force = false);

  const Problem& problem() const { return *problem_; }
  const LambdaSpace& lambda() const { return lambda_; }
  const ContractionReport& report() const { return report_; }
  /// True when running with the contraction condition violated.
  bool outside_guarantee() const { return !report_.condition_ok; }

  /// T u on u's points; point j draws from rng.at_point(j).
  TResult apply(const Field& u, std::size_t n, const SamplerOptions& opts, const StreamFamily& rng,
                Exec exec = {}) const;

  /// T u_k for several u_k with common random numbers (one path set per point).
  std::vector<TResult> apply_shared(std::span<const Field> us, std::size_t n, const SamplerOptions& opts,
                                    const StreamFamily& rng, Exec exec = {}) const;

  /// Unclamped estimates (for weight-bound checks).
  Field apply_raw(const Field& u, std::size_t n, const SamplerOptions& opts, const StreamFamily& rng,
                  Exec exec = {}) const;

 private:
  TResult clamp(Field raw) const;

  const Problem* problem_;
  LambdaSpace lambda_;
  ContractionReport report_;
};

struct PicardOptions {
  std::size_t paths = 2000;
  double growth = 1.0;
  std::size_t paths_max = 2000;
  SamplerOptions sampler;
  double tol = 0.01;
  int max_iter = 30;
  std::uint64_t seed = 1;
  bool residual = true;         // fresh-seed residual after the loop
};

PicardOptions picard_options(const Problem& problem);

struct IterationRecord {
  int iteration = 0;
  double sup_diff = 0.0;        // ||v_{n+1} - v_n||
  double max_stderr = 0.0;
  std::size_t clamp_violations = 0;
  std::size_t paths = 0;
};

struct IterationTrace {
  std::vector<IterationRecord> records;
  int iterations = 0;
  bool converged = false;
};

struct PicardResult {
  Field field;
  IterationTrace trace;
  double threshold = 0.0;       // max(tol, 3 max stderr) at the last iteration
  double residual = 0.0;        // ||T u* - u*|| with fresh seeds
  double residual_threshold = 0.0;
  bool residual_ok = false;
};

/// Iterates v_{n+1} = T v_n (epoch n) until ||v_{n+1} - v_n|| <= max(tol, 3 max stderr)
/// or max_iter. Non-convergence is reported in the trace, not thrown.
PicardResult picard_solve(const FixedPointMap& map, const Field& init, const PicardOptions& options, Exec exec = {});

/// Paths used at iteration n (1-based) of the growth schedule.
std::size_t paths_at(const PicardOptions& options, int iteration);

}  // namespace semilin
