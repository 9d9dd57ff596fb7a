#pragma once

// Monte Carlo estimators for linear problems on a domain D:
//   harmonic extension     H_D f(x) = E^x f(X(tau_D))
//   Green potential        Gq(x)    = E^x int_0^tau_D q(X_t) dt
//   Schrodinger solution   E^x[exp(int_0^tau_D q(X_t) dt) phi(X(tau_D))], q <= 0
// Each path i draws from stream (seed, purpose, point, iteration, i); sums are
// reduced in path order, so results do not depend on the thread count.

#include "semilin/field.hpp"
#include "semilin/geometry.hpp"
#include "semilin/parallel.hpp"
#include "semilin/rng.hpp"
#include "semilin/sampling.hpp"
#include "semilin/types.hpp"

#include <span>
#include <vector>

namespace semilin {

enum class ExitMethod { WalkOnSpheres, EulerMaruyama };

const char* method_name(ExitMethod m);

/// c = Gamma(d/2 - 1) / (2 pi^{d/2}); bounds the Green function of (1/2)Laplacian
/// by c |x - y|^{2-d}.
struct GreenConstants {
  int d = 3;
  double c = 0.0;

  static GreenConstants for_dimension(int d);
};

/// Radial kernel g on R^d: |v|^{d-2} for d >= 3, ln(1/|v|) for d = 2, |v| for d = 1.
double green_kernel(int d, const Point& v);

/// Newtonian kernel |v|^{2-d} (d >= 3) used by the Green-tight norm and Kato modulus.
double newtonian_kernel(int d, double r);

Estimate harmonic_extension(const Domain& domain, const ScalarField& f, const Point& x, std::size_t n,
                            ExitMethod method, const SamplerOptions& opts, const StreamFamily& rng,
                            Exec exec = {});

Estimate green_potential(const Domain& domain, const ScalarField& q, const Point& x, std::size_t n,
                         const SamplerOptions& opts, const StreamFamily& rng, Exec exec = {});

Estimate schrodinger_solution(const Domain& domain, const ScalarField& q, const ScalarField& phi, const Point& x,
                              std::size_t n, const SamplerOptions& opts, const StreamFamily& rng, Exec exec = {});

/// Several potentials evaluated on one shared set of paths (common random numbers).
std::vector<Estimate> schrodinger_solutions(const Domain& domain, std::span<const ScalarField> qs,
                                            const ScalarField& phi, const Point& x, std::size_t n,
                                            const SamplerOptions& opts, const StreamFamily& rng, Exec exec = {});

/// Pointwise harmonic extension; point j uses rng.at_point(j).
Field field_harmonic_extension(const Domain& domain, const ScalarField& f, const Grid& grid, std::size_t n,
                               ExitMethod method, const SamplerOptions& opts, const StreamFamily& rng,
                               Exec exec = {});
Field field_harmonic_extension(const Domain& domain, const ScalarField& f, const PointSet& points, std::size_t n,
                               ExitMethod method, const SamplerOptions& opts, const StreamFamily& rng,
                               Exec exec = {});

/// Pointwise Green potential; point j uses rng.at_point(j).
Field field_green_potential(const Domain& domain, const ScalarField& q, const Grid& grid, std::size_t n,
                            const SamplerOptions& opts, const StreamFamily& rng, Exec exec = {});

}  // namespace semilin
