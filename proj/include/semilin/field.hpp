#pragma once

#include "semilin/geometry.hpp"
#include "semilin/types.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace semilin {

/// Values and standard errors on a finite point set, extended to the whole
/// domain by nearest-neighbour interpolation. Nearest-neighbour never
/// overshoots the range of the stored values.
class Field {
 public:
  Field() = default;
  Field(PointSet points, Eigen::VectorXd values, Eigen::VectorXd stderrs);
  /// Field on a lattice grid; lookups go through the lattice index.
  Field(const Grid& grid, Eigen::VectorXd values, Eigen::VectorXd stderrs);

  static Field constant(const Grid& grid, double value);

  Eigen::Index size() const { return points_.cols(); }
  int dimension() const { return static_cast<int>(points_.rows()); }
  const PointSet& points() const { return points_; }
  const Eigen::VectorXd& values() const { return values_; }
  const Eigen::VectorXd& stderrs() const { return stderrs_; }
  const std::optional<Lattice>& lattice() const { return lattice_; }

  Eigen::Index nearest(const Point& x) const;
  double operator()(const Point& x) const { return values_[nearest(x)]; }

  Field with_values(Eigen::VectorXd values, Eigen::VectorXd stderrs) const;

 private:
  void check() const;
  void build_candidates();
  Eigen::Index brute_force_nearest(const Point& x) const;

  PointSet points_;
  Eigen::VectorXd values_;
  Eigen::VectorXd stderrs_;
  std::optional<Lattice> lattice_;
  // Per lattice node without a grid point: every grid point that can be the
  // nearest one to a query rounding to that node. Empty list: brute force.
  std::shared_ptr<const std::vector<std::vector<int>>> candidates_;
};

/// max_i |a_i - b_i| over a common point set.
double sup_distance(const Field& a, const Field& b);

}  // namespace semilin
