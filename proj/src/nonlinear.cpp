#include "semilin/nonlinear.hpp"

#include "semilin/diagnostics.hpp"
#include "semilin/errors.hpp"
#include "semilin/linear.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
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

// Origin-centred coarse grid for sup estimates; falls back to random interior points.
PointSet sup_samples(const Domain& domain, std::uint64_t seed) {
  try {
    return interior_grid(domain, 0.25 * domain.enclosing_radius());
  } catch (const ConfigError&) {
    return sample_interior(domain, 64, StreamFamily{seed, Purpose::Audit, 0, 0});
  }
}

}  // namespace

LambdaOptions lambda_options(const Problem& problem, Exec exec) {
  LambdaOptions o;
  o.boundary_samples = problem.solver.boundary_samples;
  o.safety = problem.solver.safety;
  o.quadrature_h = problem.solver.quadrature_h;
  o.seed = problem.solver.seed;
  o.exec = exec;
  return o;
}

LambdaSpace lambda_bounds(const Problem& problem, const LambdaOptions& options) {
  const Domain& domain = problem.domain;
  LambdaSpace L;
  L.b = problem.b;
  L.boundary_samples = options.boundary_samples;
  L.safety = options.safety;

  const PointSet ys =
      sample_boundary(domain, options.boundary_samples, StreamFamily{options.seed, Purpose::BoundarySample, 0, 0});
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (Eigen::Index j = 0; j < ys.cols(); ++j) {
    const Point y = ys.col(j);
    const double v = problem.phi(y);
    if (!std::isfinite(v)) throw HypothesisError("hypothesis violated (phi bounded required): phi = " +
                                                 std::to_string(v) + " at " + describe(y));
    if (v < lo) {
      lo = v;
      L.gamma0_witness = y;
    }
    if (std::abs(v) > hi) {
      hi = std::abs(v);
      L.phi_sup_witness = y;
    }
  }
  L.gamma0 = lo * (1.0 - options.safety);
  L.phi_sup = hi * (1.0 + options.safety);
  if (!(L.gamma0 > 0.0)) {
    throw HypothesisError("hypothesis violated (gamma0 > 0 required): inf phi = " + std::to_string(lo) + " at " +
                          describe(L.gamma0_witness));
  }
  if (!(L.phi_sup < L.b)) {
    throw HypothesisError("hypothesis violated (sup phi < b required): sup phi = " + std::to_string(L.phi_sup) +
                          " >= b = " + std::to_string(L.b));
  }

  const GreenTightNorm norm = green_tight_norm(domain, problem.U_field(), options.quadrature_h,
                                               sup_samples(domain, options.seed), options.exec);
  L.U_norm = norm.value;
  L.quadrature_warning = norm.accuracy_warning;
  L.c = GreenConstants::for_dimension(domain.dimension()).c;
  L.beta = L.c * L.U_norm;
  L.m = std::exp(-L.beta) * L.gamma0;
  L.m_tilde = L.phi_sup;
  return L;
}

double lipschitz_constant(const Problem& problem, const LambdaSpace& lambda, const PointSet& x_points) {
  if (!(lambda.m > 0.0)) throw InputError("lipschitz_constant requires m > 0");
  if (!(lambda.m_tilde > lambda.m)) return 0.0;
  const double a = lambda.m;
  const double span = lambda.m_tilde - lambda.m;
  auto estimate = [&](int nodes) {
    double best = 0.0;
    std::vector<double> H(static_cast<std::size_t>(nodes));
    const double dy = span / (nodes - 1);
    for (Eigen::Index j = 0; j < x_points.cols(); ++j) {
      const Point x = x_points.col(j);
      for (int i = 0; i < nodes; ++i) {
        const double y = (i == nodes - 1) ? lambda.m_tilde : a + i * dy;
        H[static_cast<std::size_t>(i)] = problem.F(x, y) / y;
      }
      for (int i = 0; i + 1 < nodes; ++i) {
        best = std::max(best, std::abs(H[static_cast<std::size_t>(i) + 1] - H[static_cast<std::size_t>(i)]) / dy);
      }
    }
    return best;
  };
  double prev = estimate(16);
  for (int nodes = 32; nodes <= 65536; nodes *= 2) {
    const double next = estimate(nodes);
    if (std::abs(next - prev) <= 0.01 * std::max(next, 1e-300) || next == prev) return next;
    prev = next;
  }
  return prev;
}

ContractionReport contraction_report(const Problem& problem, const LambdaSpace& lambda, double C) {
  ContractionReport r;
  r.C = C;
  r.R = problem.domain.enclosing_radius();
  r.d = problem.domain.dimension();
  r.C_tilde = lambda.phi_sup * C * r.R * r.R / r.d;
  r.condition_ok = r.C_tilde < 1.0;
  return r;
}

ScalarField q_of(const Field& u, const Problem& problem) {
  auto shared = std::make_shared<const Field>(u);
  return [shared, F = problem.F, U = problem.U](const Point& x) {
    const double v = (*shared)(x);
    const double q = -F(x, v) / v;
    return std::clamp(q, -U(x), 0.0);
  };
}

// ---------------------------------------------------------------------------

FixedPointMap::FixedPointMap(const Problem& problem, LambdaSpace lambda, ContractionReport report, bool force)
    : problem_(&problem), lambda_(lambda), report_(report) {
  if (!report_.condition_ok && !force) {
    std::ostringstream msg;
    msg << "hypothesis violated (contraction condition sup phi < d / (R^2 C)): sup phi = " << lambda_.phi_sup
        << ", d / (R^2 C) = " << (report_.C > 0 ? report_.d / (report_.R * report_.R * report_.C) : INFINITY)
        << ", C~ = " << report_.C_tilde;
    throw HypothesisError(msg.str());
  }
}

TResult FixedPointMap::clamp(Field raw) const {
  TResult out;
  Eigen::VectorXd v = raw.values();
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (v[j] < lambda_.m || v[j] > lambda_.m_tilde) {
      ++out.clamp_violations;
      v[j] = std::clamp(v[j], lambda_.m, lambda_.m_tilde);
    }
  }
  out.field = raw.with_values(std::move(v), raw.stderrs());
  return out;
}

Field FixedPointMap::apply_raw(const Field& u, std::size_t n, const SamplerOptions& opts, const StreamFamily& rng,
                               Exec exec) const {
  const ScalarField q = q_of(u, *problem_);
  const ScalarField phi = problem_->phi_field();
  const Eigen::Index np = u.size();
  Eigen::VectorXd values(np), errs(np);
  parallel_for(
      static_cast<std::size_t>(np), exec,
      [&](std::size_t j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const Estimate e = schrodinger_solution(problem_->domain, q, phi, Point(u.points().col(jj)), n, opts,
                                                rng.at_point(static_cast<std::uint32_t>(j)));
        values[jj] = e.value;
        errs[jj] = e.std_error;
      },
      1);
  return u.with_values(std::move(values), std::move(errs));
}

TResult FixedPointMap::apply(const Field& u, std::size_t n, const SamplerOptions& opts, const StreamFamily& rng,
                             Exec exec) const {
  return clamp(apply_raw(u, n, opts, rng, exec));
}

std::vector<TResult> FixedPointMap::apply_shared(std::span<const Field> us, std::size_t n, const SamplerOptions& opts,
                                                 const StreamFamily& rng, Exec exec) const {
  if (us.empty()) return {};
  std::vector<ScalarField> qs;
  for (const Field& u : us) {
    if (u.size() != us.front().size()) throw InputError("apply_shared: fields live on different point sets");
    qs.push_back(q_of(u, *problem_));
  }
  const ScalarField phi = problem_->phi_field();
  const Eigen::Index np = us.front().size();
  const std::size_t k = us.size();
  std::vector<Eigen::VectorXd> values(k, Eigen::VectorXd(np)), errs(k, Eigen::VectorXd(np));
  parallel_for(
      static_cast<std::size_t>(np), exec,
      [&](std::size_t j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const auto est = schrodinger_solutions(problem_->domain, qs, phi, Point(us.front().points().col(jj)), n, opts,
                                               rng.at_point(static_cast<std::uint32_t>(j)));
        for (std::size_t i = 0; i < k; ++i) {
          values[i][jj] = est[i].value;
          errs[i][jj] = est[i].std_error;
        }
      },
      1);
  std::vector<TResult> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(clamp(us[i].with_values(values[i], errs[i])));
  return out;
}

// ---------------------------------------------------------------------------

PicardOptions picard_options(const Problem& problem) {
  PicardOptions o;
  o.paths = problem.solver.paths;
  o.growth = problem.solver.paths_growth;
  o.paths_max = std::max(problem.solver.paths_max, problem.solver.paths);
  o.sampler = problem.solver.sampler();
  o.tol = problem.solver.tol;
  o.max_iter = problem.solver.max_iter;
  o.seed = problem.solver.seed;
  return o;
}

std::size_t paths_at(const PicardOptions& options, int iteration) {
  const double scaled = static_cast<double>(options.paths) * std::pow(options.growth, iteration - 1);
  const double cap = static_cast<double>(std::max(options.paths_max, options.paths));
  return static_cast<std::size_t>(std::llround(std::min(scaled, cap)));
}

PicardResult picard_solve(const FixedPointMap& map, const Field& init, const PicardOptions& options, Exec exec) {
  if (options.max_iter < 1) throw InputError("max_iter must be >= 1");
  PicardResult out;
  Field v = init;
  std::size_t paths = options.paths;
  for (int n = 1; n <= options.max_iter; ++n) {
    paths = paths_at(options, n);
    const StreamFamily rng{options.seed, Purpose::Operator, 0, static_cast<std::uint32_t>(n)};
    TResult next = map.apply(v, paths, options.sampler, rng, exec);
    IterationRecord rec;
    rec.iteration = n;
    rec.sup_diff = sup_distance(next.field, v);
    rec.max_stderr = next.field.stderrs().maxCoeff();
    rec.clamp_violations = next.clamp_violations;
    rec.paths = paths;
    out.trace.records.push_back(rec);
    out.trace.iterations = n;
    v = std::move(next.field);
    out.threshold = std::max(options.tol, 3.0 * rec.max_stderr);
    if (rec.sup_diff <= out.threshold) {
      out.trace.converged = true;
      break;
    }
  }
  if (options.residual) {
    const StreamFamily fresh{options.seed, Purpose::Residual, 0, 0};
    const TResult check = map.apply(v, paths, options.sampler, fresh, exec);
    out.residual = sup_distance(check.field, v);
    out.residual_threshold = out.threshold;
    out.residual_ok = out.residual <= out.residual_threshold;
  }
  out.field = std::move(v);
  return out;
}

}  // namespace semilin
