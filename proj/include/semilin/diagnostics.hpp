#pragma once

// Numerical checks of the analytic hypotheses and solution concepts:
// Green-tight norm and Kato modulus, controlled convergence at boundary
// points, a heuristic control function, and weak-form residuals.

#include "semilin/field.hpp"
#include "semilin/geometry.hpp"
#include "semilin/linear.hpp"
#include "semilin/parallel.hpp"
#include "semilin/rng.hpp"
#include "semilin/sampling.hpp"
#include "semilin/types.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace semilin {

// ---------------------------------------------------------------------------
// Green-tight norm and Kato modulus

struct GreenTightNorm {
  double value = 0.0;               // max over x-samples
  Point argmax;
  double singular_fraction = 0.0;   // largest share of the small-ball correction
  bool accuracy_warning = false;    // singular_fraction > 10%
};

/// sup_x int_D |w(y)| |x - y|^{2-d} dy by midpoint quadrature on cells of
/// side h; the cell containing x is replaced by
///   max|w| * int_{|z| < h/2} |z|^{2-d} dz = max|w| * |S^{d-1}| (h/2)^2 / 2.
/// The maximum is over `x_samples` only, so the result under-estimates the sup.
GreenTightNorm green_tight_norm(const Domain& domain, const ScalarField& w, double h, const PointSet& x_samples,
                                Exec exec = {});

/// sup_x int_{|y - x| <= alpha} |w(y)| |x - y|^{2-d} dy with w extended by zero
/// outside D. Quadrature on cells of side alpha / cells_per_radius centred at x.
double kato_modulus(const Domain& domain, const ScalarField& w, double alpha, const PointSet& x_samples,
                    int cells_per_radius = 16);

/// kato_modulus at alpha0, alpha0/2, ..., alpha0/2^(levels-1).
std::vector<double> kato_profile(const Domain& domain, const ScalarField& w, double alpha0, int levels,
                                 const PointSet& x_samples, int cells_per_radius = 16);

// ---------------------------------------------------------------------------
// Controlled convergence

struct ApproachSettings {
  int terms = 12;
  double decay = 0.5;
  double start_distance = 0.5;   // multiplied by R
  double angle = 0.0;            // radians from the inward normal; 0 = normal approach
};

struct ApproachSequence {
  Point target;
  PointSet points;  // one per column, approaching target
};

/// Normal (or oblique) approach sequences x_j = y + delta_j v with
/// delta_j = start * R * decay^j. Throws InputError if a term leaves D.
std::vector<ApproachSequence> approach_sequences(const Domain& domain, const PointSet& targets,
                                                 const ApproachSettings& settings);

enum class Classification { Star, StarStar, Inconclusive };
const char* classification_name(Classification c);

struct ControlledConvergenceReport {
  Point boundary_point;
  PointSet sequence;
  Eigen::VectorXd h_values;
  Eigen::VectorXd k_values;
  double phi_value = 0.0;
  Classification classification = Classification::Inconclusive;
  double tail_error = 0.0;
  bool pass = false;
};

struct ConvergenceCheckOptions {
  int tail = 4;
  double tolerance = 0.05;      // for |h - phi(y)| (star) and |h / (1 + k)| (star_star)
  double k_threshold = 1e3;
};

/// Estimator evaluated at sequence point x; `index` enumerates all evaluated
/// points and is meant to select a stream.
using PointEstimator = std::function<Estimate(const Point& x, std::uint32_t index)>;

/// For each sequence: if k stays below the threshold on the tail, check that
/// h tends to phi(y); if k exceeds it on the whole tail, check that
/// h / (1 + k) tends to zero; otherwise inconclusive (fails).
std::vector<ControlledConvergenceReport> controlled_convergence_check(const Domain& domain, const PointEstimator& h,
                                                                      const PointEstimator& k,
                                                                      const ScalarField& phi,
                                                                      const std::vector<ApproachSequence>& sequences,
                                                                      const ConvergenceCheckOptions& options,
                                                                      Exec exec = {});

/// H_D f at arbitrary points by walk-on-spheres, point index -> stream point.
PointEstimator harmonic_estimator(const Domain& domain, ScalarField f, std::size_t n, SamplerOptions opts,
                                  StreamFamily rng);

PointEstimator constant_estimator(double value);

// ---------------------------------------------------------------------------
// Discontinuity sets and the heuristic control function

struct DiscontinuityPiece {
  enum class Kind { Point, Polyline, Plane };
  Kind kind = Kind::Point;
  PointSet vertices;   // Point: one column; Polyline: ordered vertices
  bool closed = false; // Polyline only
  Point normal;        // Plane only: boundary section {n . y = offset}
  double offset = 0.0;
};

/// Finite union of points, polylines and plane sections of the boundary.
class DiscontinuitySet {
 public:
  DiscontinuitySet() = default;
  explicit DiscontinuitySet(std::vector<DiscontinuityPiece> pieces) : pieces_(std::move(pieces)) {}

  bool empty() const { return pieces_.empty(); }
  const std::vector<DiscontinuityPiece>& pieces() const { return pieces_; }

  /// Distance from y to the set. Plane sections are exact on balls and
  /// annuli; on other shapes the distance to the plane is used.
  double distance(const Domain& domain, const Point& y) const;

  /// Points sampled along the set (for default diagnostic targets).
  PointSet sample(const Domain& domain, int per_piece) const;

 private:
  std::vector<DiscontinuityPiece> pieces_;
};

struct ControlFunction {
  ScalarField g;                      // boundary function min(dist(y, S)^-a, M)
  Field k;                            // H_D g on the requested points
  std::vector<std::string> warnings;
};

/// g(y) = min(dist(y, S)^{-a}, M) with a in (0, d - 2], M finite; g = 0 for empty S.
ScalarField control_boundary_function(const Domain& domain, const DiscontinuitySet& S, double exponent, double cap);

ControlFunction control_function_heuristic(const Domain& domain, const DiscontinuitySet& S, bool phi_discontinuous,
                                           double exponent, double cap, const PointSet& points, std::size_t n,
                                           const SamplerOptions& opts, const StreamFamily& rng, Exec exec = {});

// ---------------------------------------------------------------------------
// Weak-form residuals

/// Smooth bump exp(-1 / (1 - |x - c|^2 / rho^2)) supported in the open ball B(c, rho).
struct BumpFunction {
  Point center;
  double radius = 0.5;

  double value(const Point& x) const;
  double laplacian(const Point& x) const;
};

/// r(x, u) in (1/2) Laplacian u = r(x, u).
using Reaction = std::function<double(const Point& x, double u)>;

struct WeakResidual {
  double residual = 0.0;           // (1/2) int u Lap(psi) - int r(x, u) psi
  double quadrature_error = 0.0;   // max over the 2^d coarse sublattices of |R_h - R_2h|
  double mc_sigma = 0.0;           // propagated standard error
  double budget = 0.0;             // quadrature_error + 3 mc_sigma
  bool within_budget = false;
};

/// Lattice quadrature of the weak form over the field's grid. The field must
/// carry its lattice; the bump support must stay h/2 inside the domain.
WeakResidual weak_residual(const Domain& domain, const Field& u, const Reaction& reaction, const BumpFunction& psi);

/// r(x, u) = -q(x): the Green potential identity (1/2) Lap(Gq) = -q.
Reaction source_reaction(ScalarField q);

}  // namespace semilin
