#include "semilin/errors.hpp"
#include "semilin/linear.hpp"
#include "semilin/nonlinear.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <cmath>
#include <numbers>
#include <string>

using namespace semilin;

namespace {

Point p3(double a, double b, double c) { return Point(Eigen::Vector3d(a, b, c)); }

Problem ball_problem(const std::string& F, const std::string& U, const std::string& phi, const std::string& b = "2",
                     double grid_h = 0.5) {
  return parse_problem(R"({"dimension": 3, "domain": {"shape": "ball", "radius": 1}, "F": ")" + F + R"(", "U": ")" +
                       U + R"(", "phi": ")" + phi + R"(", "b": )" + b +
                       R"(, "solver": {"grid_h": )" + std::to_string(grid_h) +
                       R"(, "dt": 0.001, "bridge_correction": true, "paths": 2000, "seed": 3}})");
}

struct Setup {
  Problem problem;
  LambdaSpace lambda;
  ContractionReport report;
  Grid grid;
};

Setup setup(Problem p) {
  Setup s{std::move(p), {}, {}, {}};
  s.lambda = lambda_bounds(s.problem, lambda_options(s.problem));
  s.grid = interior_lattice(s.problem.domain, s.problem.solver.grid_h);
  s.report = contraction_report(s.problem, s.lambda, lipschitz_constant(s.problem, s.lambda, s.grid.points));
  return s;
}

double combined(double a, double b) { return std::sqrt(a * a + b * b); }

}  // namespace

TEST_CASE("nearest-neighbour lookup agrees with brute force") {
  const Domain domains[] = {Domain::ball(Point::Zero(3), 1.0), Domain::annulus(Point::Zero(3), 0.4, 1.0),
                            Domain::box(p3(-1, -0.5, 0), p3(1, 0.5, 0.3))};
  RngStream rng(16, StreamKey{Purpose::Test, 0, 0, 0});
  for (const Domain& d : domains) {
    for (double h : {0.25, 0.1}) {
      const Grid grid = interior_lattice(d, h);
      const Field f = Field::constant(grid, 1.0);
      for (int i = 0; i < 3000; ++i) {
        Point x(3);
        for (int k = 0; k < 3; ++k) {
          const double span = d.bbox_hi()[k] - d.bbox_lo()[k];
          x[k] = d.bbox_lo()[k] - 0.2 * span + 1.4 * span * rng.uniform();
        }
        double best = INFINITY;
        Eigen::Index want = 0;
        for (Eigen::Index j = 0; j < grid.points.cols(); ++j) {
          const double d2 = (grid.points.col(j) - x).squaredNorm();
          if (d2 < best) {
            best = d2;
            want = j;
          }
        }
        CHECK(f.nearest(x) == want);
      }
    }
  }
}

TEST_CASE("Lambda bounds for the quadratic reaction") {
  const Problem p = ball_problem("u^2", "2", "1");
  const LambdaSpace L = lambda_bounds(p, lambda_options(p));
  CHECK(L.c == doctest::Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(1e-15));
  CHECK(L.U_norm == doctest::Approx(2.0 * oracle::newtonian_unit_ball(0.0)).epsilon(0.02));
  CHECK(L.beta == doctest::Approx(2.0).epsilon(0.02));
  CHECK(L.m == doctest::Approx(std::exp(-2.0)).epsilon(0.03));
  CHECK(L.m == std::exp(-L.beta) * L.gamma0);
  CHECK(L.gamma0 == 1.0);
  CHECK(L.m_tilde == 1.0);
  CHECK(L.b == 2.0);
  CHECK_FALSE(L.quadrature_warning);

  const Problem tight = ball_problem("u^2", "2", "1", "1");
  CHECK_THROWS_WITH_AS(lambda_bounds(tight, lambda_options(tight)), doctest::Contains("sup phi < b"), HypothesisError);
}

TEST_CASE("Lambda bounds for two-valued and vanishing data") {
  const Problem p = ball_problem("u^2", "2", "0.3 + 0.2 * step(x3)");
  const LambdaSpace L = lambda_bounds(p, lambda_options(p));
  CHECK(L.gamma0 == 0.3);
  CHECK(L.m_tilde == 0.5);
  CHECK(L.gamma0_witness[2] <= 0.0);
  CHECK(L.phi_sup_witness[2] > 0.0);

  const Problem zero = ball_problem("u^2", "2", "0");
  CHECK_THROWS_WITH_AS(lambda_bounds(zero, lambda_options(zero)), doctest::Contains("gamma0 > 0 required"),
                       HypothesisError);
}

TEST_CASE("Lipschitz constant examples") {
  {
    const auto s = setup(ball_problem("u^2", "2", "1"));
    CHECK(s.report.C == doctest::Approx(1.0).epsilon(1e-12));
  }
  {
    const auto s = setup(ball_problem("0.7 * u", "1", "1"));
    CHECK(s.report.C == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s.report.C_tilde < 1e-12);
    CHECK(s.report.condition_ok);
  }
  {
    const auto s = setup(ball_problem("u^2 * (1 + r^2) / 2", "2", "1", "2", 0.125));
    // H_x(y) = y (1 + |x|^2) / 2 has Lipschitz constant (1 + |x|^2) / 2.
    double brute = 0.0;
    for (Eigen::Index j = 0; j < s.grid.points.cols(); ++j) {
      brute = std::max(brute, (1.0 + s.grid.points.col(j).squaredNorm()) / 2.0);
    }
    CHECK(s.report.C == doctest::Approx(brute).epsilon(1e-9));
    CHECK(s.report.C < 1.0);
    CHECK(s.report.C > 0.9);
  }
}

TEST_CASE("contraction report examples") {
  const auto ok = setup(ball_problem("u^2", "2", "1"));
  CHECK(ok.report.C_tilde == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(ok.report.condition_ok);
  CHECK(ok.report.R == 1.0);
  CHECK(ok.report.d == 3);

  // U = 4 keeps F = u^2 <= U u on (0, b) for b = 4.
  const auto bad = setup(ball_problem("u^2", "4", "3", "4"));
  CHECK(bad.report.C_tilde == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(bad.report.condition_ok);
  CHECK_THROWS_WITH_AS(FixedPointMap(bad.problem, bad.lambda, bad.report), doctest::Contains("contraction"),
                       HypothesisError);
  const FixedPointMap forced(bad.problem, bad.lambda, bad.report, true);
  CHECK(forced.outside_guarantee());

  const ContractionReport zero = contraction_report(ok.problem, ok.lambda, 0.0);
  CHECK(zero.C_tilde == 0.0);
  CHECK(zero.condition_ok);
}

TEST_CASE("q_u examples") {
  const Grid grid = interior_lattice(Domain::ball(Point::Zero(3), 1.0), 0.5);
  const Field half = Field::constant(grid, 0.5);
  const Point x = p3(0.1, -0.2, 0.3);
  CHECK(q_of(half, ball_problem("u^2", "2", "1"))(x) == -0.5);
  CHECK(q_of(half, ball_problem("0.7 * u", "1", "1"))(x) == doctest::Approx(-0.7).epsilon(1e-15));
  CHECK(q_of(Field::constant(grid, 0.9), ball_problem("0.7 * u", "1", "1"))(x) == doctest::Approx(-0.7).epsilon(1e-15));
  CHECK(q_of(half, ball_problem("0", "1", "1"))(x) == 0.0);
  // Clamped to [-U, 0].
  CHECK(q_of(half, ball_problem("u^2", "0.1", "1"))(x) == -0.1);
}

TEST_CASE("T with a vanishing reaction is the harmonic extension") {
  const auto s = setup(ball_problem("0", "1", "2 + x1", "4"));
  const FixedPointMap T(s.problem, s.lambda, s.report);
  const auto opts = s.problem.solver.sampler();
  const StreamFamily fam{11, Purpose::Operator, 0, 1};
  const TResult a = T.apply(Field::constant(s.grid, s.lambda.m), 2000, opts, fam);
  const TResult b = T.apply(Field::constant(s.grid, s.lambda.m_tilde), 2000, opts, fam);
  CHECK(a.field.values() == b.field.values());
  for (Eigen::Index j = 0; j < a.field.size(); ++j) {
    CHECK(std::abs(a.field.values()[j] - (2.0 + s.grid.points(0, j))) <=
          3 * a.field.stderrs()[j] + 0.5 * std::sqrt(opts.dt));
  }
}

TEST_CASE("T for a linear reaction matches the radial oracle") {
  const double lambda = 0.5;
  const auto s = setup(ball_problem("0.5 * u", "1", "1"));
  const FixedPointMap T(s.problem, s.lambda, s.report);
  const auto opts = s.problem.solver.sampler();
  const double want0 = oracle::radial_closed_form(lambda, 0.0);
  for (double u0 : {s.lambda.m, 0.5 * (s.lambda.m + s.lambda.m_tilde), s.lambda.m_tilde}) {
    const TResult r = T.apply(Field::constant(s.grid, u0), 4000, opts, StreamFamily{12, Purpose::Operator, 0, 1});
    const Eigen::Index centre = r.field.nearest(Point::Zero(3));
    CHECK(r.field.points().col(centre).norm() == 0.0);
    CHECK(std::abs(r.field.values()[centre] - want0) <= 3 * r.field.stderrs()[centre] + 0.5 * opts.dt);
  }

  // At the fixed point, a fresh application reproduces the field within noise.
  const TResult u = T.apply(Field::constant(s.grid, 1.0), 4000, opts, StreamFamily{12, Purpose::Operator, 0, 2});
  const TResult tu = T.apply(u.field, 4000, opts, StreamFamily{12, Purpose::Residual, 0, 0});
  for (Eigen::Index j = 0; j < u.field.size(); ++j) {
    CHECK(std::abs(tu.field.values()[j] - u.field.values()[j]) <=
          3 * combined(tu.field.stderrs()[j], u.field.stderrs()[j]));
  }
}

TEST_CASE("T maps Lambda into Lambda and respects the weight bounds") {
  const auto s = setup(ball_problem("u^2", "2", "1"));
  const FixedPointMap T(s.problem, s.lambda, s.report);
  const auto opts = s.problem.solver.sampler();
  RngStream rng(13, StreamKey{Purpose::Test, 0, 0, 0});
  Eigen::VectorXd v(s.grid.points.cols());
  for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = s.lambda.m + rng.uniform() * (s.lambda.m_tilde - s.lambda.m);
  const Field u(s.grid, v, Eigen::VectorXd::Zero(v.size()));
  const Field raw = T.apply_raw(u, 1000, opts, StreamFamily{13, Purpose::Operator, 0, 1});
  for (Eigen::Index j = 0; j < raw.size(); ++j) {
    CHECK(raw.values()[j] >= std::exp(-s.lambda.beta) * s.lambda.gamma0 - 3 * raw.stderrs()[j]);
    CHECK(raw.values()[j] <= s.lambda.phi_sup + 3 * raw.stderrs()[j]);
  }
  const TResult clamped = T.apply(u, 1000, opts, StreamFamily{13, Purpose::Operator, 0, 1});
  CHECK(clamped.field.values().minCoeff() >= s.lambda.m);
  CHECK(clamped.field.values().maxCoeff() <= s.lambda.m_tilde);
  for (Eigen::Index j = 0; j < raw.size(); ++j) {
    CHECK(clamped.field.values()[j] == std::clamp(raw.values()[j], s.lambda.m, s.lambda.m_tilde));
  }
}

TEST_CASE("shared-seed contraction estimate") {
  const auto s = setup(ball_problem("u^2", "2", "1"));
  const FixedPointMap T(s.problem, s.lambda, s.report);
  const auto opts = s.problem.solver.sampler();
  RngStream rng(14, StreamKey{Purpose::Test, 0, 0, 0});
  for (int pair = 0; pair < 3; ++pair) {
    Eigen::VectorXd a(s.grid.points.cols()), b(s.grid.points.cols());
    for (Eigen::Index j = 0; j < a.size(); ++j) {
      a[j] = s.lambda.m + rng.uniform() * (s.lambda.m_tilde - s.lambda.m);
      b[j] = s.lambda.m + rng.uniform() * (s.lambda.m_tilde - s.lambda.m);
    }
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(a.size());
    const Field us[] = {Field(s.grid, a, zero), Field(s.grid, b, zero)};
    const auto t = T.apply_shared(us, 500, opts, StreamFamily{14, Purpose::Operator, static_cast<std::uint32_t>(pair), 1});
    const double noise = 3 * combined(t[0].field.stderrs().maxCoeff(), t[1].field.stderrs().maxCoeff());
    CHECK(sup_distance(t[0].field, t[1].field) <= s.report.C_tilde * sup_distance(us[0], us[1]) + noise);
  }
}

TEST_CASE("decomposition T u - H phi = G(q_u T u)") {
  const auto s = setup(ball_problem("u^2", "2", "1"));
  const FixedPointMap T(s.problem, s.lambda, s.report);
  const auto opts = s.problem.solver.sampler();
  const Field u = Field::constant(s.grid, 0.5);
  const TResult tu = T.apply(u, 4000, opts, StreamFamily{15, Purpose::Operator, 0, 1});
  const ScalarField q = q_of(u, s.problem);
  const Field tu_field = tu.field;
  const ScalarField integrand = [q, tu_field](const Point& x) { return q(x) * tu_field(x); };
  // Nearest-neighbour error of the Tu interpolant, bounded by the largest jump between neighbours.
  double jump = 0.0;
  for (Eigen::Index i = 0; i < tu_field.size(); ++i)
    for (Eigen::Index j = 0; j < tu_field.size(); ++j)
      if ((tu_field.points().col(i) - tu_field.points().col(j)).norm() <= 1.01 * s.problem.solver.grid_h)
        jump = std::max(jump, std::abs(tu_field.values()[i] - tu_field.values()[j]));
  const Point pts[] = {p3(0, 0, 0), p3(0.5, 0, 0), p3(0, 0.5, 0), p3(0, 0, -0.5), p3(0.5, 0.5, 0)};
  int k = 0;
  for (const Point& x : pts) {
    const Eigen::Index j = tu_field.nearest(x);
    REQUIRE((tu_field.points().col(j) - x).norm() < 1e-12);
    const Estimate g = green_potential(s.problem.domain, integrand, x, 20000, opts,
                                       StreamFamily{15, Purpose::GreenPotential, static_cast<std::uint32_t>(k++), 0});
    const double lhs = tu_field.values()[j] - 1.0;  // H_D phi = 1 for phi = 1
    const double allowance = 3 * combined(g.std_error, tu_field.stderrs()[j]) +
                             0.5 * oracle::ball_exit_time(1, x.norm(), 3) * jump + 0.5 * std::sqrt(opts.dt) * 0.5;
    INFO("x = " << x.transpose() << ", Tu - 1 = " << lhs << ", G(q Tu) = " << g.value);
    CHECK(std::abs(lhs - g.value) <= allowance);
  }
}

TEST_CASE("Picard iteration") {
  SUBCASE("linear reaction settles after one step") {
    const auto s = setup(ball_problem("0.5 * u", "1", "1"));
    const FixedPointMap T(s.problem, s.lambda, s.report);
    PicardOptions o = picard_options(s.problem);
    o.paths = o.paths_max = 4000;
    o.tol = 0.02;
    const PicardResult r = picard_solve(T, Field::constant(s.grid, s.lambda.m_tilde), o);
    REQUIRE(r.trace.records.size() >= 2);
    CHECK(r.trace.records.size() == static_cast<std::size_t>(r.trace.iterations));
    CHECK(r.trace.converged);
    CHECK(r.trace.iterations == 2);
    for (const auto& rec : r.trace.records) CHECK(rec.sup_diff >= 0.0);
  }
  SUBCASE("quadratic reaction contracts geometrically down to the noise floor") {
    const auto s = setup(ball_problem("u^2", "2", "1"));
    const FixedPointMap T(s.problem, s.lambda, s.report);
    PicardOptions o = picard_options(s.problem);
    o.tol = 1e-4;  // run into the noise floor
    o.max_iter = 6;
    o.paths = o.paths_max = 2000;
    const PicardResult r = picard_solve(T, Field::constant(s.grid, s.lambda.m_tilde), o);
    const auto& recs = r.trace.records;
    REQUIRE(recs.size() >= 3);
    for (std::size_t n = 1; n < recs.size(); ++n) {
      const double noise = 2 * 3 * std::max(recs[n].max_stderr, recs[n - 1].max_stderr);
      CHECK(recs[n].sup_diff <= s.report.C_tilde * recs[n - 1].sup_diff + noise);
    }
    CHECK(recs[1].sup_diff < recs[0].sup_diff);
    CHECK(r.field.values().minCoeff() >= s.lambda.m);
    CHECK(r.field.values().maxCoeff() <= s.lambda.m_tilde);
  }
  SUBCASE("non-convergence is reported, not thrown") {
    const auto s = setup(ball_problem("u^2", "2", "1"));
    const FixedPointMap T(s.problem, s.lambda, s.report);
    PicardOptions o = picard_options(s.problem);
    o.tol = 0.0;
    o.max_iter = 2;
    o.paths = o.paths_max = 200;
    o.residual = false;
    // Threshold is max(tol, 3 max SE); the first step from m~ moves far more than that.
    const PicardResult r = picard_solve(T, Field::constant(s.grid, s.lambda.m_tilde), o);
    CHECK(r.trace.iterations <= 2);
    if (!r.trace.converged) CHECK(r.trace.iterations == 2);
    PicardOptions none = o;
    none.max_iter = 0;
    CHECK_THROWS_AS(picard_solve(T, Field::constant(s.grid, 1.0), none), InputError);
  }
  SUBCASE("growth schedule") {
    PicardOptions o;
    o.paths = 1000;
    o.growth = 1.5;
    o.paths_max = 3000;
    CHECK(paths_at(o, 1) == 1000);
    CHECK(paths_at(o, 2) == 1500);
    CHECK(paths_at(o, 3) == 2250);
    CHECK(paths_at(o, 4) == 3000);
  }
}
