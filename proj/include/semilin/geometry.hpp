#pragma once

// Bounded domains in R^d (d >= 3) described by a signed distance:
// negative inside, positive outside, |sd(x)| never larger than the
// Euclidean distance from x to the boundary.

#include "semilin/expr.hpp"
#include "semilin/types.hpp"

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace semilin {

struct BallShape {
  Point center;
  double radius = 1.0;
};

struct BoxShape {
  Point lo;
  Point hi;
};

struct AnnulusShape {
  Point center;
  double r_in = 0.5;
  double r_out = 1.0;
};

/// Domain given by a user expression in x1..xd. The expression is trusted to
/// be a valid (under-estimating) signed distance of a regular domain.
struct ImplicitShape {
  std::shared_ptr<const Expr> sdf;
};

using Shape = std::variant<BallShape, BoxShape, AnnulusShape, ImplicitShape>;

class Domain {
 public:
  static Domain ball(Point center, double radius);
  static Domain box(Point lo, Point hi);
  static Domain annulus(Point center, double r_in, double r_out);
  /// The enclosing radius must bound |x| over the domain; it is not verified.
  static Domain implicit(const std::string& sdf_source, int dimension, std::optional<double> enclosing_radius);

  int dimension() const { return dim_; }
  const Shape& shape() const { return shape_; }
  const char* shape_name() const;
  double boundary_tolerance() const { return boundary_tol_; }
  Domain& set_boundary_tolerance(double tol);

  /// Radius R of the origin-centred ball containing the domain.
  double enclosing_radius() const { return enclosing_radius_; }
  /// Axis-aligned box containing the domain.
  const Point& bbox_lo() const { return bbox_lo_; }
  const Point& bbox_hi() const { return bbox_hi_; }

 private:
  Domain(int dim, Shape shape);
  void finish(std::optional<double> enclosing_radius);

  int dim_ = 3;
  Shape shape_;
  double enclosing_radius_ = 0.0;
  double boundary_tol_ = 0.0;
  Point bbox_lo_;
  Point bbox_hi_;
};

double signed_distance(const Domain& domain, const Point& x);

/// Boundary point near x. Exact (radial / face / clamp) for ball, box and
/// annulus; bisection along the numerical gradient for implicit shapes.
Point project_to_boundary(const Domain& domain, const Point& x);

/// Unit outward normal at (or near) a boundary point.
Point outward_normal(const Domain& domain, const Point& y);

double enclosing_ball(const Domain& domain);

/// Regular lattice with spacing h anchored at the bounding-box centre.
/// Keeps the per-axis index ranges so lookups can be done by rounding.
struct Lattice {
  Point origin;                  // position of index (0, ..., 0)
  double spacing = 0.0;
  std::vector<int> counts;       // nodes per axis
  std::vector<int> node_to_point;  // linearised node -> point column or -1

  int index_of(const Point& x) const;  // linear node index or -1 if out of range
};

struct Grid {
  PointSet points;
  Lattice lattice;
};

/// Lattice points with signed distance <= -h/2, lexicographic in the lattice
/// index (x1 slowest). Throws ConfigError when empty.
Grid interior_lattice(const Domain& domain, double h);
PointSet interior_grid(const Domain& domain, double h);

/// Check that a point has the domain's dimension.
void require_dimension(const Domain& domain, const Point& x);

}  // namespace semilin
