#include "semilin/field.hpp"

#include "semilin/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace semilin {

Field::Field(PointSet points, Eigen::VectorXd values, Eigen::VectorXd stderrs)
    : points_(std::move(points)), values_(std::move(values)), stderrs_(std::move(stderrs)) {
  check();
}

Field::Field(const Grid& grid, Eigen::VectorXd values, Eigen::VectorXd stderrs)
    : points_(grid.points), values_(std::move(values)), stderrs_(std::move(stderrs)), lattice_(grid.lattice) {
  check();
  build_candidates();
}

namespace {

// Calls fn(linear node) for every node of the index box [a, b] (inclusive).
template <class Fn>
void for_each_node(const std::vector<int>& counts, const std::vector<long>& a, const std::vector<long>& b, Fn&& fn) {
  const std::size_t d = counts.size();
  std::vector<long> k = a;
  for (;;) {
    std::size_t node = 0;
    for (std::size_t i = 0; i < d; ++i) node = node * static_cast<std::size_t>(counts[i]) + static_cast<std::size_t>(k[i]);
    fn(node);
    std::size_t i = d;
    while (i > 0) {
      --i;
      if (++k[i] <= b[i]) break;
      k[i] = a[i];
      if (i == 0) return;
    }
  }
}

constexpr long kMaxRing = 3;

}  // namespace

void Field::build_candidates() {
  const Lattice& lat = *lattice_;
  const int d = dimension();
  const auto dd = static_cast<std::size_t>(d);
  const std::size_t nodes = lat.node_to_point.size();
  const double h = lat.spacing;
  auto lists = std::make_shared<std::vector<std::vector<int>>>(nodes);
  // Queries served by node n lie in the box [lo, hi]: the half-cell around n,
  // widened to one full spacing outward on the lattice faces. With
  // U = min_p maxdist(box, p), only points with mindist(box, p) <= U can be nearest.
  // U is bounded using the points of the first non-empty ring of nodes; nodes
  // with no point within kMaxRing rings keep an empty list (brute force).
  Point lo(d), hi(d);
  std::vector<long> idx(dd), a(dd), b(dd);
  auto dists = [&](int j, double& mn, double& mx) {
    mn = 0.0;
    mx = 0.0;
    for (int i = 0; i < d; ++i) {
      const double p = points_(i, j);
      const double gap = std::max({lo[i] - p, p - hi[i], 0.0});
      const double span = std::max(std::abs(p - lo[i]), std::abs(p - hi[i]));
      mn += gap * gap;
      mx += span * span;
    }
  };
  auto set_box = [&](long r) {
    for (std::size_t i = 0; i < dd; ++i) {
      a[i] = std::max<long>(0, idx[i] - r);
      b[i] = std::min<long>(lat.counts[i] - 1, idx[i] + r);
    }
  };
  for (std::size_t n = 0; n < nodes; ++n) {
    if (lat.node_to_point[n] >= 0) continue;
    std::size_t rem = n;
    for (int i = d - 1; i >= 0; --i) {
      const auto c = static_cast<std::size_t>(lat.counts[static_cast<std::size_t>(i)]);
      const auto k = rem % c;
      rem /= c;
      idx[static_cast<std::size_t>(i)] = static_cast<long>(k);
      const double centre = lat.origin[i] + static_cast<double>(k) * h;
      lo[i] = centre - (k == 0 ? h : 0.5 * h);
      hi[i] = centre + (k + 1 == c ? h : 0.5 * h);
    }
    double bound2 = std::numeric_limits<double>::infinity();
    for (long r = 1; r <= kMaxRing && !std::isfinite(bound2); ++r) {
      set_box(r);
      for_each_node(lat.counts, a, b, [&](std::size_t m) {
        const int j = lat.node_to_point[m];
        if (j < 0) return;
        double mn, mx;
        dists(j, mn, mx);
        bound2 = std::min(bound2, mx);
      });
    }
    if (!std::isfinite(bound2)) continue;
    // A point at index offset s has mindist >= (s - 1) h from the box.
    set_box(static_cast<long>(std::ceil(std::sqrt(bound2) / h)) + 1);
    auto& list = (*lists)[n];
    for_each_node(lat.counts, a, b, [&](std::size_t m) {
      const int j = lat.node_to_point[m];
      if (j < 0) return;
      double mn, mx;
      dists(j, mn, mx);
      if (mn <= bound2) list.push_back(j);
    });
    std::sort(list.begin(), list.end());
  }
  candidates_ = std::move(lists);
}

Field Field::constant(const Grid& grid, double value) {
  const Eigen::Index n = grid.points.cols();
  return Field(grid, Eigen::VectorXd::Constant(n, value), Eigen::VectorXd::Zero(n));
}

void Field::check() const {
  if (values_.size() != points_.cols() || stderrs_.size() != points_.cols()) {
    throw InputError("field values/stderrs must match the number of points");
  }
  if (points_.cols() == 0) throw InputError("field has no points");
  if ((stderrs_.array() < 0.0).any()) throw InputError("field standard errors must be non-negative");
}

Field Field::with_values(Eigen::VectorXd values, Eigen::VectorXd stderrs) const {
  Field f = *this;
  f.values_ = std::move(values);
  f.stderrs_ = std::move(stderrs);
  f.check();
  return f;
}

Eigen::Index Field::brute_force_nearest(const Point& x) const {
  Eigen::Index best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < points_.cols(); ++j) {
    const double d2 = (points_.col(j) - x).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = j;
    }
  }
  return best;
}

Eigen::Index Field::nearest(const Point& x) const {
  if (x.size() != points_.rows()) throw InputError("field query has the wrong dimension");
  if (lattice_) {
    const Lattice& lat = *lattice_;
    std::size_t node = 0;
    bool clamped = false;
    bool far = false;
    for (std::size_t i = 0; i < lat.counts.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double t = (x[ii] - lat.origin[ii]) / lat.spacing;
      long k = static_cast<long>(std::floor(t + 0.5));
      if (k < 0 || k >= lat.counts[i]) {
        clamped = true;
        k = std::clamp<long>(k, 0, lat.counts[i] - 1);
        far = far || std::abs(t - static_cast<double>(k)) > 1.0;
      }
      node = node * static_cast<std::size_t>(lat.counts[i]) + static_cast<std::size_t>(k);
    }
    // An unclamped rounded node is the nearest lattice node; if it carries a
    // point that point is the nearest grid point.
    const int p = lat.node_to_point[node];
    if (p >= 0 && !clamped) return p;
    if (p < 0 && !far) {
      const auto& list = (*candidates_)[node];
      if (!list.empty()) {
        Eigen::Index best = list.front();
        double best_d2 = std::numeric_limits<double>::infinity();
        for (int j : list) {
          const double d2 = (points_.col(j) - x).squaredNorm();
          if (d2 < best_d2) {
            best_d2 = d2;
            best = j;
          }
        }
        return best;
      }
    }
  }
  return brute_force_nearest(x);
}

double sup_distance(const Field& a, const Field& b) {
  if (a.size() != b.size()) throw InputError("fields live on different point sets");
  return (a.values() - b.values()).cwiseAbs().maxCoeff();
}

}  // namespace semilin
