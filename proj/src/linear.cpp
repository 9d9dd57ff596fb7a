#include "semilin/linear.hpp"

#include "semilin/errors.hpp"

#include <cmath>
#include <numbers>
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

double eval_boundary(const ScalarField& f, const Point& y) {
  try {
    return f(y);
  } catch (const EvalError& e) {
    throw EvalError(std::string(e.what()) + " [boundary point " + describe(y) + "]");
  }
}

// Column j of the result holds quantity j for every path, in path order.
template <class PerPath>
Eigen::MatrixXd run_paths(std::size_t n, Eigen::Index m, const StreamFamily& rng, Exec exec, PerPath&& per_path) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), m);
  parallel_for(
      n, exec,
      [&](std::size_t i) {
        RngStream stream = rng.stream(static_cast<std::uint32_t>(i));
        per_path(stream, out.row(static_cast<Eigen::Index>(i)));
      },
      256);
  return out;
}

Estimate column_estimate(const Eigen::MatrixXd& samples, Eigen::Index j) {
  return estimate_from(std::span<const double>(samples.col(j).data(), static_cast<std::size_t>(samples.rows())));
}

void require_samples(std::size_t n) {
  if (n < 2) throw InputError("at least two samples are required for a standard error");
}

}  // namespace

const char* method_name(ExitMethod m) { return m == ExitMethod::WalkOnSpheres ? "wos" : "em"; }

GreenConstants GreenConstants::for_dimension(int d) {
  if (d < 3) throw InputError("Green constant requires d >= 3");
  const double half = 0.5 * d;
  return GreenConstants{d, std::tgamma(half - 1.0) / (2.0 * std::pow(std::numbers::pi, half))};
}

double green_kernel(int d, const Point& v) {
  if (d < 1 || v.size() != d) throw InputError("green_kernel: dimension mismatch");
  const double r = v.norm();
  if (r == 0.0) throw InputError("green_kernel: singular at v = 0");
  if (d >= 3) return std::pow(r, d - 2);
  if (d == 2) return std::log(1.0 / r);
  return r;
}

double newtonian_kernel(int d, double r) {
  if (!(r > 0.0)) throw InputError("newtonian_kernel: singular at r = 0");
  return std::pow(r, 2 - d);
}

Estimate harmonic_extension(const Domain& domain, const ScalarField& f, const Point& x, std::size_t n,
                            ExitMethod method, const SamplerOptions& opts, const StreamFamily& rng, Exec exec) {
  require_samples(n);
  require_dimension(domain, x);
  const std::vector<LabeledIntegrand> none;
  auto samples = run_paths(n, 1, rng, exec, [&](RngStream& s, auto row) {
    const Point y = method == ExitMethod::WalkOnSpheres ? wos_exit(domain, x, opts.shell, s, opts.step_cap).exit_point
                                                        : em_path(domain, x, opts, none, s).exit_point;
    row(0) = eval_boundary(f, y);
  });
  return column_estimate(samples, 0);
}

Estimate green_potential(const Domain& domain, const ScalarField& q, const Point& x, std::size_t n,
                         const SamplerOptions& opts, const StreamFamily& rng, Exec exec) {
  require_samples(n);
  const std::vector<LabeledIntegrand> integrands{{"q", q}};
  auto samples = run_paths(n, 1, rng, exec, [&](RngStream& s, auto row) {
    row(0) = em_path(domain, x, opts, integrands, s).occupation[0].second;
  });
  return column_estimate(samples, 0);
}

std::vector<Estimate> schrodinger_solutions(const Domain& domain, std::span<const ScalarField> qs,
                                            const ScalarField& phi, const Point& x, std::size_t n,
                                            const SamplerOptions& opts, const StreamFamily& rng, Exec exec) {
  require_samples(n);
  std::vector<LabeledIntegrand> integrands;
  integrands.reserve(qs.size());
  for (std::size_t j = 0; j < qs.size(); ++j) {
    const ScalarField& q = qs[j];
    integrands.push_back({"q" + std::to_string(j), [&q](const Point& p) {
                            const double v = q(p);
                            if (v > 0.0) {
                              throw InputError("potential must be non-positive; q = " + std::to_string(v) + " at " +
                                               describe(p));
                            }
                            return v;
                          }});
  }
  const auto m = static_cast<Eigen::Index>(qs.size());
  auto samples = run_paths(n, m, rng, exec, [&](RngStream& s, auto row) {
    const PathSample path = em_path(domain, x, opts, integrands, s);
    const double payoff = eval_boundary(phi, path.exit_point);
    for (Eigen::Index j = 0; j < m; ++j) row(j) = std::exp(path.occupation[static_cast<std::size_t>(j)].second) * payoff;
  });
  std::vector<Estimate> out;
  out.reserve(qs.size());
  for (Eigen::Index j = 0; j < m; ++j) out.push_back(column_estimate(samples, j));
  return out;
}

Estimate schrodinger_solution(const Domain& domain, const ScalarField& q, const ScalarField& phi, const Point& x,
                              std::size_t n, const SamplerOptions& opts, const StreamFamily& rng, Exec exec) {
  return schrodinger_solutions(domain, std::span<const ScalarField>(&q, 1), phi, x, n, opts, rng, exec).front();
}

namespace {

template <class PointEstimator>
std::pair<Eigen::VectorXd, Eigen::VectorXd> per_point(const PointSet& points, Exec exec, PointEstimator&& est) {
  const auto np = static_cast<std::size_t>(points.cols());
  Eigen::VectorXd values(points.cols());
  Eigen::VectorXd errs(points.cols());
  parallel_for(
      np, exec,
      [&](std::size_t j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const Estimate e = est(Point(points.col(jj)), static_cast<std::uint32_t>(j));
        values[jj] = e.value;
        errs[jj] = e.std_error;
      },
      1);
  return {values, errs};
}

}  // namespace

Field field_harmonic_extension(const Domain& domain, const ScalarField& f, const PointSet& points, std::size_t n,
                               ExitMethod method, const SamplerOptions& opts, const StreamFamily& rng, Exec exec) {
  auto [v, e] = per_point(points, exec, [&](const Point& x, std::uint32_t j) {
    return harmonic_extension(domain, f, x, n, method, opts, rng.at_point(j));
  });
  return Field(points, std::move(v), std::move(e));
}

Field field_harmonic_extension(const Domain& domain, const ScalarField& f, const Grid& grid, std::size_t n,
                               ExitMethod method, const SamplerOptions& opts, const StreamFamily& rng, Exec exec) {
  auto [v, e] = per_point(grid.points, exec, [&](const Point& x, std::uint32_t j) {
    return harmonic_extension(domain, f, x, n, method, opts, rng.at_point(j));
  });
  return Field(grid, std::move(v), std::move(e));
}

Field field_green_potential(const Domain& domain, const ScalarField& q, const Grid& grid, std::size_t n,
                            const SamplerOptions& opts, const StreamFamily& rng, Exec exec) {
  auto [v, e] = per_point(grid.points, exec, [&](const Point& x, std::uint32_t j) {
    return green_potential(domain, q, x, n, opts, rng.at_point(j));
  });
  return Field(grid, std::move(v), std::move(e));
}

}  // namespace semilin
