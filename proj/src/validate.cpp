#include "semilin/validate.hpp"

#include "semilin/errors.hpp"

#include <cmath>
#include <sstream>

namespace semilin {

namespace {

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

std::string describe(const Point& x) {
  std::ostringstream out;
  out.precision(6);
  out << '(';
  for (Eigen::Index i = 0; i < x.size(); ++i) out << (i ? ", " : "") << x[i];
  out << ')';
  return out.str();
}

// u in (0, b): uniform for finite b, log-uniform on [1e-6, 1e6] otherwise.
double sample_u(RngStream& rng, double b) {
  if (std::isfinite(b)) {
    double u = 0.0;
    while (u == 0.0) u = rng.uniform() * b;
    return u;
  }
  return std::exp(std::log(1e-6) + rng.uniform() * (std::log(1e6) - std::log(1e-6)));
}

}  // namespace

std::string ValidationReport::first_failure() const {
  for (const auto& c : checks) {
    if (!c.pass) return c.name;
  }
  return {};
}

ValidationReport validate(const Problem& problem, const ValidationOptions& options) {
  ValidationReport rep;
  rep.audit_samples = options.audit_samples;
  rep.seed = options.seed;
  const Domain& domain = problem.domain;
  const std::size_t n = options.audit_samples;

  const PointSet xs = sample_interior(domain, n, StreamFamily{options.seed, Purpose::Audit, 0, 0});
  const PointSet ys = sample_boundary(domain, n, StreamFamily{options.seed, Purpose::Audit, 1, 0});

  auto guarded = [&](const std::string& name, auto&& body) {
    ValidationCheck c;
    c.name = name;
    try {
      body(c);
    } catch (const EvalError& e) {
      c.pass = false;
      c.detail = std::string("evaluation error: ") + e.what();
    }
    rep.checks.push_back(std::move(c));
    return rep.checks.back().pass;
  };

  const bool u_ok = guarded("U > 0", [&](ValidationCheck& c) {
    c.pass = true;
    for (Eigen::Index j = 0; j < xs.cols(); ++j) {
      const Point x = xs.col(j);
      const double v = problem.U(x);
      if (!(v > 0.0) || !std::isfinite(v)) {
        c.pass = false;
        c.detail = "U = " + fmt(v) + " at " + describe(x);
        c.witness = x;
        return;
      }
    }
    c.detail = "U positive and finite on " + std::to_string(xs.cols()) + " interior samples";
  });

  const bool f_ok = guarded("0 <= F(x,u) <= U(x) u", [&](ValidationCheck& c) {
    RngStream rng(options.seed, StreamKey{Purpose::Audit, 2, 0, 0});
    c.pass = true;
    for (Eigen::Index j = 0; j < xs.cols(); ++j) {
      const Point x = xs.col(j);
      const double u = sample_u(rng, problem.b);
      const double f = problem.F(x, u);
      const double bound = problem.U(x) * u;
      const double slack = 1e-12 * std::max(1.0, std::abs(bound));
      if (!(f >= -slack)) {
        c.pass = false;
        c.detail = "F >= 0 violated: F = " + fmt(f) + " at x = " + describe(x) + ", u = " + fmt(u);
      } else if (!(f <= bound + slack)) {
        c.pass = false;
        c.detail = "F <= U u violated: F = " + fmt(f) + " > " + fmt(bound) + " at x = " + describe(x) +
                   ", u = " + fmt(u);
      }
      if (!c.pass) {
        c.witness = x;
        c.witness_u = u;
        return;
      }
    }
    c.detail = "holds on " + std::to_string(xs.cols()) + " samples of D x (0, b)";
  });

  const bool phi_ok = guarded("phi >= 0, bounded, sup phi < b", [&](ValidationCheck& c) {
    c.pass = true;
    double sup = 0.0;
    for (Eigen::Index j = 0; j < ys.cols(); ++j) {
      const Point y = ys.col(j);
      const double v = problem.phi(y);
      if (!std::isfinite(v) || v < 0.0) {
        c.pass = false;
        c.detail = "phi = " + fmt(v) + " at " + describe(y);
        c.witness = y;
        return;
      }
      if (v >= problem.b) {
        c.pass = false;
        c.detail = "sup phi < b violated: phi = " + fmt(v) + " >= b = " + fmt(problem.b) + " at " + describe(y);
        c.witness = y;
        return;
      }
      sup = std::max(sup, v);
    }
    c.detail = "sup phi = " + fmt(sup) + " on " + std::to_string(ys.cols()) + " boundary samples";
  });

  bool lambda_ok = false;
  if (u_ok && f_ok && phi_ok) {
    lambda_ok = guarded("gamma0 > 0 (Lambda bounds)", [&](ValidationCheck& c) {
      try {
        rep.lambda = lambda_bounds(problem, lambda_options(problem, options.exec));
        c.pass = true;
        c.detail = "gamma0 = " + fmt(rep.lambda->gamma0) + ", beta = " + fmt(rep.lambda->beta) +
                   ", m = " + fmt(rep.lambda->m) + ", m~ = " + fmt(rep.lambda->m_tilde);
        if (rep.lambda->quadrature_warning) c.detail += " (quadrature accuracy warning)";
      } catch (const HypothesisError& e) {
        c.pass = false;
        c.detail = e.what();
      }
    });
  } else {
    rep.checks.push_back({"gamma0 > 0 (Lambda bounds)", false, "skipped: an earlier hypothesis failed", {}, {}});
  }

  if (lambda_ok) {
    guarded("contraction sup phi < d/(R^2 C)", [&](ValidationCheck& c) {
      const PointSet grid = interior_grid(domain, problem.solver.grid_h);
      const double C = lipschitz_constant(problem, *rep.lambda, grid);
      rep.contraction = contraction_report(problem, *rep.lambda, C);
      const auto& r = *rep.contraction;
      c.pass = r.condition_ok;
      c.detail = "C = " + fmt(r.C) + ", C~ = sup phi C R^2 / d = " + fmt(r.C_tilde) +
                 (r.condition_ok ? " < 1" : " >= 1: sup phi < d/(R^2 C) fails");
    });
  } else {
    rep.checks.push_back({"contraction sup phi < d/(R^2 C)", false, "skipped: Lambda bounds unavailable", {}, {}});
  }

  rep.pass = true;
  for (const auto& c : rep.checks) rep.pass = rep.pass && c.pass;
  return rep;
}

}  // namespace semilin
