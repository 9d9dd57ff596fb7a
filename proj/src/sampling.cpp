#include "semilin/sampling.hpp"

#include "semilin/errors.hpp"

#include <cmath>
#include <sstream>

namespace semilin {

namespace {

std::string describe(const Point& x) {
  std::ostringstream out;
  out.precision(6);
  out << '(';
  for (Eigen::Index i = 0; i < x.size(); ++i) out << (i ? ", " : "") << x[i];
  out << ')';
  return out.str();
}

}  // namespace

SamplerOptions SamplerOptions::defaults_for(const Domain& domain) {
  const double R = domain.enclosing_radius();
  SamplerOptions o;
  o.shell = 1e-4 * R;
  o.dt = 1e-4 * R * R;
  return o;
}

double PathSample::occupation_integral(const std::string& label) const {
  for (const auto& [name, value] : occupation) {
    if (name == label) return value;
  }
  throw InputError("no occupation integral registered under '" + label + "'");
}

double feynman_kac_weight(const PathSample& sample, const std::string& label) {
  return std::exp(sample.occupation_integral(label));
}

ExitSample wos_exit(const Domain& domain, const Point& x, double shell, RngStream& rng, std::size_t step_cap) {
  require_dimension(domain, x);
  if (!(shell > 0.0)) throw InputError("walk-on-spheres shell must be positive");
  if (!(signed_distance(domain, x) < 0.0)) throw InputError("walk-on-spheres start " + describe(x) + " is not interior");
  const int d = domain.dimension();
  Point pos = x;
  Point dir(d);
  std::size_t steps = 0;
  for (;;) {
    const double dist = -signed_distance(domain, pos);
    if (dist <= shell) return ExitSample{project_to_boundary(domain, pos), steps};
    if (steps >= step_cap) {
      throw NumericalError("walk-on-spheres exceeded " + std::to_string(step_cap) + " steps from " + describe(x));
    }
    double n2;
    do {
      rng.fill_normal(dir);
      n2 = dir.squaredNorm();
    } while (n2 == 0.0);
    pos.noalias() += (dist / std::sqrt(n2)) * dir;
    ++steps;
  }
}

PathSample em_path(const Domain& domain, const Point& x, const SamplerOptions& opts,
                   const std::vector<LabeledIntegrand>& integrands, RngStream& rng) {
  require_dimension(domain, x);
  if (!(opts.dt > 0.0)) throw InputError("time step must be positive");
  double sd = signed_distance(domain, x);
  if (!(sd < 0.0)) throw InputError("path start " + describe(x) + " is not interior");

  const int d = domain.dimension();
  const double sqrt_dt = std::sqrt(opts.dt);
  const std::size_t m = integrands.size();
  // Same expression as signed_distance for balls, without the dispatch.
  const auto* ball = std::get_if<BallShape>(&domain.shape());
  auto distance = [&](const Point& p) {
    return ball ? (p - ball->center).norm() - ball->radius : signed_distance(domain, p);
  };
  std::vector<double> acc(m, 0.0);
  Point pos = x;
  Point z(d);
  std::size_t k = 0;
  for (;;) {
    if (k >= opts.step_cap) {
      throw NumericalError("Euler-Maruyama path exceeded " + std::to_string(opts.step_cap) + " steps from " +
                           describe(x));
    }
    for (std::size_t i = 0; i < m; ++i) {
      try {
        acc[i] += integrands[i].w(pos) * opts.dt;
      } catch (const EvalError& e) {
        throw EvalError(std::string(e.what()) + " [integrand '" + integrands[i].label + "' at step " +
                        std::to_string(k) + ", x = " + describe(pos) + "]");
      }
    }
    rng.fill_normal(z);
    pos.noalias() += sqrt_dt * z;
    ++k;
    const double next = distance(pos);
    bool exited = next >= 0.0;
    if (!exited && opts.bridge_correction) {
      // Crossing probability of a Brownian bridge for a locally flat boundary.
      // Below 2^-53 only u == 0 can fall under it; the draw is made either way.
      const double a = 2.0 * sd * next / opts.dt;
      const double u = rng.uniform();
      exited = a < 40.0 ? u < std::exp(-a) : (u == 0.0 && a < 745.0);
    }
    if (exited) {
      PathSample s;
      s.exit_point = project_to_boundary(domain, pos);
      s.exit_time = static_cast<double>(k) * opts.dt;
      s.steps = k;
      s.occupation.reserve(m);
      for (std::size_t i = 0; i < m; ++i) s.occupation.emplace_back(integrands[i].label, acc[i]);
      return s;
    }
    sd = next;
  }
}

PointSet sample_interior(const Domain& domain, std::size_t n, const StreamFamily& rng) {
  const int d = domain.dimension();
  PointSet out(d, static_cast<Eigen::Index>(n));
  const Point lo = domain.bbox_lo();
  const Point span = domain.bbox_hi() - lo;
  for (std::size_t j = 0; j < n; ++j) {
    RngStream s = rng.stream(static_cast<std::uint32_t>(j));
    Point x(d);
    int attempts = 0;
    do {
      if (++attempts > 100000) throw ConfigError("interior sampling failed: domain volume too small");
      for (int i = 0; i < d; ++i) x[i] = lo[i] + span[i] * s.uniform();
    } while (!(signed_distance(domain, x) < 0.0));
    out.col(static_cast<Eigen::Index>(j)) = x;
  }
  return out;
}

PointSet sample_boundary(const Domain& domain, std::size_t n, const StreamFamily& rng) {
  const int d = domain.dimension();
  PointSet out(d, static_cast<Eigen::Index>(n));
  const Shape& shape = domain.shape();
  if (const auto* ball = std::get_if<BallShape>(&shape)) {
    for (std::size_t j = 0; j < n; ++j) {
      RngStream s = rng.stream(static_cast<std::uint32_t>(j));
      out.col(static_cast<Eigen::Index>(j)) = ball->center + ball->radius * s.unit_vector(d);
    }
  } else if (const auto* ann = std::get_if<AnnulusShape>(&shape)) {
    const double w_out = std::pow(ann->r_out, d - 1);
    const double w_in = std::pow(ann->r_in, d - 1);
    for (std::size_t j = 0; j < n; ++j) {
      RngStream s = rng.stream(static_cast<std::uint32_t>(j));
      const double r = s.uniform() * (w_in + w_out) < w_out ? ann->r_out : ann->r_in;
      out.col(static_cast<Eigen::Index>(j)) = ann->center + r * s.unit_vector(d);
    }
  } else if (const auto* box = std::get_if<BoxShape>(&shape)) {
    const Point ext = box->hi - box->lo;
    std::vector<double> face_area(static_cast<std::size_t>(d));
    double total = 0.0;
    for (int i = 0; i < d; ++i) {
      double a = 1.0;
      for (int k = 0; k < d; ++k) {
        if (k != i) a *= ext[k];
      }
      face_area[static_cast<std::size_t>(i)] = a;
      total += 2.0 * a;
    }
    for (std::size_t j = 0; j < n; ++j) {
      RngStream s = rng.stream(static_cast<std::uint32_t>(j));
      double pick = s.uniform() * total;
      int axis = 0;
      bool upper = false;
      for (int i = 0; i < d; ++i) {
        const double a = face_area[static_cast<std::size_t>(i)];
        if (pick < a) {
          axis = i;
          break;
        }
        pick -= a;
        if (pick < a) {
          axis = i;
          upper = true;
          break;
        }
        pick -= a;
        axis = i;
        upper = true;
      }
      Point y(d);
      for (int i = 0; i < d; ++i) y[i] = box->lo[i] + ext[i] * s.uniform();
      y[axis] = upper ? box->hi[axis] : box->lo[axis];
      out.col(static_cast<Eigen::Index>(j)) = y;
    }
  } else {
    StreamFamily starts = rng;
    starts.iteration = rng.iteration + 1;
    const PointSet x0 = sample_interior(domain, n, starts);
    const double shell = 1e-6 * domain.enclosing_radius();
    for (std::size_t j = 0; j < n; ++j) {
      RngStream s = rng.stream(static_cast<std::uint32_t>(j));
      out.col(static_cast<Eigen::Index>(j)) = wos_exit(domain, x0.col(static_cast<Eigen::Index>(j)), shell, s).exit_point;
    }
  }
  return out;
}

}  // namespace semilin
