#include "semilin/geometry.hpp"

#include "semilin/errors.hpp"

#include <algorithm>
#include <cmath>

namespace semilin {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr int kMaxBracketSteps = 60;
constexpr int kMaxBisections = 200;

Point numerical_gradient(const Expr& sdf, const Point& x, double step) {
  Point g(x.size());
  Point probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    const double fp = sdf(probe);
    probe[i] = x[i] - step;
    const double fm = sdf(probe);
    probe[i] = x[i];
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

Point project_implicit(const Domain& domain, const Expr& sdf, const Point& x) {
  const double tol = domain.boundary_tolerance();
  const double s0 = sdf(x);
  if (std::abs(s0) <= tol) return x;
  Point n = numerical_gradient(sdf, x, 1e-6 * domain.enclosing_radius());
  const double gn = n.norm();
  if (!(gn > 0.0) || !std::isfinite(gn)) throw NumericalError("implicit projection: vanishing gradient");
  n /= gn;
  const double dir = s0 < 0.0 ? 1.0 : -1.0;  // towards the boundary
  double t_lo = 0.0;
  double t_hi = std::max(std::abs(s0), tol);
  int expansions = 0;
  while (sdf(Point(x + dir * t_hi * n)) * s0 > 0.0) {
    t_lo = t_hi;
    t_hi *= 2.0;
    if (++expansions > kMaxBracketSteps) throw NumericalError("implicit projection: no sign change along gradient");
  }
  for (int it = 0; it < kMaxBisections; ++it) {
    const double t = 0.5 * (t_lo + t_hi);
    Point y = x + dir * t * n;
    const double s = sdf(y);
    if (std::abs(s) <= tol) return y;
    if (s * s0 > 0.0) {
      t_lo = t;
    } else {
      t_hi = t;
    }
  }
  throw NumericalError("implicit projection: bisection did not reach the boundary tolerance");
}

}  // namespace

Domain::Domain(int dim, Shape shape) : dim_(dim), shape_(std::move(shape)) {
  if (dim < 3) throw InputError("domain dimension must be >= 3, got " + std::to_string(dim));
}

void Domain::finish(std::optional<double> enclosing_radius) {
  std::visit(overloaded{
                 [&](const BallShape& s) {
                   enclosing_radius_ = s.center.norm() + s.radius;
                   bbox_lo_ = s.center.array() - s.radius;
                   bbox_hi_ = s.center.array() + s.radius;
                 },
                 [&](const BoxShape& s) {
                   enclosing_radius_ = s.lo.cwiseAbs().cwiseMax(s.hi.cwiseAbs()).norm();
                   bbox_lo_ = s.lo;
                   bbox_hi_ = s.hi;
                 },
                 [&](const AnnulusShape& s) {
                   enclosing_radius_ = s.center.norm() + s.r_out;
                   bbox_lo_ = s.center.array() - s.r_out;
                   bbox_hi_ = s.center.array() + s.r_out;
                 },
                 [&](const ImplicitShape&) {
                   if (!enclosing_radius || !(*enclosing_radius > 0.0)) {
                     throw ConfigError("implicit domain requires a positive user-supplied enclosing_radius");
                   }
                   enclosing_radius_ = *enclosing_radius;
                   bbox_lo_ = Point::Constant(dim_, -enclosing_radius_);
                   bbox_hi_ = Point::Constant(dim_, enclosing_radius_);
                 },
             },
             shape_);
  boundary_tol_ = 1e-9 * enclosing_radius_;
}

Domain Domain::ball(Point center, double radius) {
  if (!(radius > 0.0)) throw InputError("ball radius must be positive");
  const int d = static_cast<int>(center.size());
  Domain dom(d, BallShape{std::move(center), radius});
  dom.finish(std::nullopt);
  return dom;
}

Domain Domain::box(Point lo, Point hi) {
  if (lo.size() != hi.size()) throw InputError("box corners differ in dimension");
  if (!(hi.array() > lo.array()).all()) throw InputError("box requires lo < hi in every coordinate");
  const int d = static_cast<int>(lo.size());
  Domain dom(d, BoxShape{std::move(lo), std::move(hi)});
  dom.finish(std::nullopt);
  return dom;
}

Domain Domain::annulus(Point center, double r_in, double r_out) {
  if (!(r_in > 0.0 && r_out > r_in)) throw InputError("annulus requires 0 < r_in < r_out");
  const int d = static_cast<int>(center.size());
  Domain dom(d, AnnulusShape{std::move(center), r_in, r_out});
  dom.finish(std::nullopt);
  return dom;
}

Domain Domain::implicit(const std::string& sdf_source, int dimension, std::optional<double> enclosing_radius) {
  auto sdf = std::make_shared<const Expr>(Expr::parse(sdf_source, Role::Domain, dimension));
  Domain dom(dimension, ImplicitShape{std::move(sdf)});
  dom.finish(enclosing_radius);
  return dom;
}

const char* Domain::shape_name() const {
  return std::visit(overloaded{[](const BallShape&) { return "ball"; }, [](const BoxShape&) { return "box"; },
                               [](const AnnulusShape&) { return "annulus"; },
                               [](const ImplicitShape&) { return "implicit"; }},
                    shape_);
}

Domain& Domain::set_boundary_tolerance(double tol) {
  if (!(tol > 0.0)) throw InputError("boundary tolerance must be positive");
  boundary_tol_ = tol;
  return *this;
}

void require_dimension(const Domain& domain, const Point& x) {
  if (x.size() != domain.dimension()) {
    throw InputError("point has dimension " + std::to_string(x.size()) + ", domain has " +
                     std::to_string(domain.dimension()));
  }
}

double signed_distance(const Domain& domain, const Point& x) {
  require_dimension(domain, x);
  return std::visit(overloaded{
                        [&](const BallShape& s) { return (x - s.center).norm() - s.radius; },
                        [&](const BoxShape& s) {
                          const double* lo = s.lo.data();
                          const double* hi = s.hi.data();
                          double outside = 0.0;
                          double inside = -std::numeric_limits<double>::infinity();
                          for (Eigen::Index i = 0; i < x.size(); ++i) {
                            const double c = 0.5 * (lo[i] + hi[i]);
                            const double q = std::abs(x[i] - c) - 0.5 * (hi[i] - lo[i]);
                            if (q > 0.0) outside += q * q;
                            inside = std::max(inside, q);
                          }
                          return std::sqrt(outside) + std::min(inside, 0.0);
                        },
                        [&](const AnnulusShape& s) {
                          const double rho = (x - s.center).norm();
                          return std::max(rho - s.r_out, s.r_in - rho);
                        },
                        [&](const ImplicitShape& s) { return (*s.sdf)(x); },
                    },
                    domain.shape());
}

Point project_to_boundary(const Domain& domain, const Point& x) {
  require_dimension(domain, x);
  return std::visit(
      overloaded{
          [&](const BallShape& s) -> Point {
            const Point v = x - s.center;
            const double n = v.norm();
            if (n == 0.0) throw InputError("cannot project the ball centre to the boundary");
            return s.center + (s.radius / n) * v;
          },
          [&](const BoxShape& s) -> Point {
            Point y = x.cwiseMax(s.lo).cwiseMin(s.hi);
            if (signed_distance(domain, x) < 0.0) {
              Eigen::Index axis = 0;
              double best = -std::numeric_limits<double>::infinity();
              for (Eigen::Index i = 0; i < x.size(); ++i) {
                const double c = 0.5 * (s.lo[i] + s.hi[i]);
                const double q = std::abs(x[i] - c) - 0.5 * (s.hi[i] - s.lo[i]);
                if (q > best) {
                  best = q;
                  axis = i;
                }
              }
              const double c = 0.5 * (s.lo[axis] + s.hi[axis]);
              y[axis] = x[axis] >= c ? s.hi[axis] : s.lo[axis];
            }
            return y;
          },
          [&](const AnnulusShape& s) -> Point {
            const Point v = x - s.center;
            const double n = v.norm();
            if (n == 0.0) throw InputError("cannot project the annulus centre to the boundary");
            const double target = n > 0.5 * (s.r_in + s.r_out) ? s.r_out : s.r_in;
            return s.center + (target / n) * v;
          },
          [&](const ImplicitShape& s) -> Point { return project_implicit(domain, *s.sdf, x); },
      },
      domain.shape());
}

Point outward_normal(const Domain& domain, const Point& y) {
  require_dimension(domain, y);
  return std::visit(
      overloaded{
          [&](const BallShape& s) -> Point { return (y - s.center).normalized(); },
          [&](const BoxShape& s) -> Point {
            Eigen::Index axis = 0;
            double best = -std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < y.size(); ++i) {
              const double c = 0.5 * (s.lo[i] + s.hi[i]);
              const double q = std::abs(y[i] - c) - 0.5 * (s.hi[i] - s.lo[i]);
              if (q > best) {
                best = q;
                axis = i;
              }
            }
            Point n = Point::Zero(y.size());
            n[axis] = y[axis] >= 0.5 * (s.lo[axis] + s.hi[axis]) ? 1.0 : -1.0;
            return n;
          },
          [&](const AnnulusShape& s) -> Point {
            const Point v = y - s.center;
            const double rho = v.norm();
            return rho > 0.5 * (s.r_in + s.r_out) ? Point(v / rho) : Point(-v / rho);
          },
          [&](const ImplicitShape& s) -> Point {
            Point g = numerical_gradient(*s.sdf, y, 1e-6 * domain.enclosing_radius());
            const double n = g.norm();
            if (!(n > 0.0)) throw NumericalError("implicit normal: vanishing gradient");
            return g / n;
          },
      },
      domain.shape());
}

double enclosing_ball(const Domain& domain) { return domain.enclosing_radius(); }

int Lattice::index_of(const Point& x) const {
  int linear = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double t = (x[static_cast<Eigen::Index>(i)] - origin[static_cast<Eigen::Index>(i)]) / spacing;
    const long k = static_cast<long>(std::floor(t + 0.5));
    if (k < 0 || k >= counts[i]) return -1;
    linear = linear * counts[i] + static_cast<int>(k);
  }
  return linear;
}

Grid interior_lattice(const Domain& domain, double h) {
  if (!(h > 0.0)) throw ConfigError("grid spacing must be positive");
  const int d = domain.dimension();
  Grid grid;
  Lattice& lat = grid.lattice;
  lat.spacing = h;
  lat.origin.resize(d);
  lat.counts.resize(static_cast<std::size_t>(d));
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) {
    const double centre = 0.5 * (domain.bbox_lo()[i] + domain.bbox_hi()[i]);
    const double half = 0.5 * (domain.bbox_hi()[i] - domain.bbox_lo()[i]);
    const int k = static_cast<int>(std::floor(half / h + 1e-12));
    lat.origin[i] = centre - k * h;
    lat.counts[static_cast<std::size_t>(i)] = 2 * k + 1;
    total *= static_cast<std::size_t>(2 * k + 1);
  }
  if (total > (std::size_t{1} << 28)) throw ConfigError("grid spacing too small: lattice too large");
  lat.node_to_point.assign(total, -1);

  const double margin = -0.5 * h + 1e-12 * h;
  std::vector<double> coords;
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  Point x(d);
  int n_points = 0;
  for (std::size_t linear = 0; linear < total; ++linear) {
    std::size_t rem = linear;
    for (int i = d - 1; i >= 0; --i) {
      const auto c = static_cast<std::size_t>(lat.counts[static_cast<std::size_t>(i)]);
      idx[static_cast<std::size_t>(i)] = static_cast<int>(rem % c);
      rem /= c;
    }
    for (int i = 0; i < d; ++i) x[i] = lat.origin[i] + idx[static_cast<std::size_t>(i)] * h;
    if (signed_distance(domain, x) <= margin) {
      lat.node_to_point[linear] = n_points++;
      coords.insert(coords.end(), x.data(), x.data() + d);
    }
  }
  if (n_points == 0) throw ConfigError("interior grid is empty: spacing " + std::to_string(h) + " is too large");
  grid.points = Eigen::Map<const PointSet>(coords.data(), d, n_points);
  return grid;
}

PointSet interior_grid(const Domain& domain, double h) { return interior_lattice(domain, h).points; }

}  // namespace semilin
