#include "semilin/errors.hpp"
#include "semilin/problem.hpp"
#include "semilin/validate.hpp"

#include "doctest.h"

#include <cmath>
#include <string>

using namespace semilin;

namespace {

std::string ball_doc(const std::string& F, const std::string& U, const std::string& phi, const std::string& b,
                     const std::string& extra = "") {
  return R"({"dimension": 3, "domain": {"shape": "ball", "radius": 1}, "F": ")" + F + R"(", "U": ")" + U +
         R"(", "phi": ")" + phi + R"(", "b": )" + b + extra + "}";
}

ValidationOptions quick(std::uint64_t seed = 1) {
  ValidationOptions o;
  o.audit_samples = 4000;
  o.seed = seed;
  return o;
}

}  // namespace

TEST_CASE("a minimal file receives the documented defaults") {
  const Problem p = parse_problem(ball_doc("u^2", "2", "1", "2"));
  CHECK(p.dimension == 3);
  CHECK(p.b == 2.0);
  CHECK(p.domain.enclosing_radius() == doctest::Approx(1.0));
  CHECK(p.solver.grid_h == doctest::Approx(0.25));
  CHECK(p.solver.dt == doctest::Approx(1e-4));
  CHECK(p.solver.shell == doctest::Approx(1e-4));
  CHECK(p.solver.quadrature_h == doctest::Approx(0.05));
  CHECK(p.solver.paths == 2000);
  CHECK(p.solver.paths_max == 2000);
  CHECK(p.solver.paths_growth == 1.0);
  CHECK(p.solver.tol == 0.01);
  CHECK(p.solver.max_iter == 30);
  CHECK(p.solver.seed == 1);
  CHECK(p.solver.safety == 0.0);
  CHECK_FALSE(p.solver.bridge_correction);
  CHECK_FALSE(p.analytic_reference.has_value());
  CHECK(p.diagnostics.discontinuity_set.empty());

  // b defaults to +infinity when omitted.
  const Problem q = parse_problem(
      R"({"dimension": 3, "domain": {"shape": "ball", "radius": 2}, "F": "0", "U": "1", "phi": "1"})");
  CHECK(std::isinf(q.b));
  CHECK(q.solver.grid_h == doctest::Approx(0.5));
  CHECK(q.solver.dt == doctest::Approx(4e-4));
}

TEST_CASE("schema errors name the offending key") {
  const std::string no_phi =
      R"({"dimension": 3, "domain": {"shape": "ball", "radius": 1}, "F": "u^2", "U": "2", "b": 2})";
  CHECK_THROWS_WITH_AS(parse_problem(no_phi), doctest::Contains("\"phi\""), InputError);

  const std::string typo =
      R"({"dimension": 3, "domain": {"shape": "ball", "radius": 1}, "F": "u^2", "U": "2", "Phi": "1", "phi": "1", "b": 2})";
  CHECK_THROWS_WITH_AS(parse_problem(typo), doctest::Contains("Phi"), InputError);

  CHECK_THROWS_WITH_AS(parse_problem(ball_doc("u^2", "2", "1", "2", R"(, "solver": {"pathz": 10})")),
                       doctest::Contains("solver.pathz"), InputError);
  CHECK_THROWS_WITH_AS(parse_problem(ball_doc("u^2", "2", "1", "2", R"(, "solver": {"grid_h": -1})")),
                       doctest::Contains("solver.grid_h"), InputError);
  CHECK_THROWS_WITH_AS(parse_problem(ball_doc("u^2", "2", "1", "\"two\"")), doctest::Contains("b"), InputError);
  CHECK_THROWS_WITH_AS(parse_problem(ball_doc("u^2 +", "2", "1", "2")), doctest::Contains("F"), InputError);
  CHECK_THROWS_WITH_AS(parse_problem(ball_doc("u^2", "u", "1", "2")), doctest::Contains("U"), InputError);
  CHECK_THROWS_AS(parse_problem("{not json"), InputError);
  CHECK_THROWS_AS(parse_problem(R"({"dimension": 2, "domain": {"shape": "ball", "radius": 1}, "F": "0", "U": "1", "phi": "1"})"),
                  InputError);
  CHECK_THROWS_WITH_AS(
      parse_problem(R"({"dimension": 3, "domain": {"shape": "disc", "radius": 1}, "F": "0", "U": "1", "phi": "1"})"),
      doctest::Contains("domain.shape"), InputError);
}

TEST_CASE("save then parse reproduces the canonical form") {
  const std::string docs[] = {
      ball_doc("u^2", "2", "1", "2", R"(, "solver": {"grid_h": 0.25, "paths": 500, "seed": 7, "bridge_correction": true})"),
      R"j({"dimension": 3, "domain": {"shape": "box", "lo": [-1, -1, -1], "hi": [1, 1, 1]},
          "F": "0.5 * u * (1 + x1^2)", "U": "1", "phi": "step(x3) + 0.5", "b": 3,
          "diagnostics": {"discontinuity_set": [{"type": "plane", "normal": [0, 0, 1], "offset": 0}],
                          "bumps": [{"center": [0, 0, 0], "radius": 0.5}]}})j",
      R"j({"dimension": 4, "domain": {"shape": "annulus", "center": [0, 0, 0, 0], "r_in": 0.5, "r_out": 1.5},
          "F": "u / (1 + u)", "U": "1", "phi": "1 + 0.1 * x4", "analytic_reference": "1"})j",
      R"j({"dimension": 3, "domain": {"shape": "implicit", "expression": "x1^2 + 2 * x2^2 + x3^2 - 1",
          "enclosing_radius": 1}, "F": "0", "U": "1", "phi": "x1^2"})j",
  };
  for (const auto& doc : docs) {
    const Problem p = parse_problem(doc);
    const std::string once = save_problem(p);
    const std::string twice = save_problem(parse_problem(once));
    CHECK(once == twice);
  }
}

TEST_CASE("validate accepts the square nonlinearity") {
  const Problem p = parse_problem(ball_doc("u^2", "2", "1", "2", R"(, "solver": {"grid_h": 0.5})"));
  const ValidationReport r = validate(p, quick());
  CHECK(r.pass);
  CHECK(r.first_failure().empty());
  REQUIRE(r.checks.size() == 5);
  REQUIRE(r.lambda.has_value());
  REQUIRE(r.contraction.has_value());
  CHECK(r.contraction->condition_ok);
  CHECK(r.contraction->C_tilde < 1.0);
}

TEST_CASE("validate reports the first failing hypothesis with a witness") {
  SUBCASE("u^2 exceeds 2u above u = 2") {
    const Problem p = parse_problem(ball_doc("u^2", "2", "3", "4", R"(, "solver": {"grid_h": 0.5})"));
    const ValidationReport r = validate(p, quick());
    CHECK_FALSE(r.pass);
    CHECK(r.first_failure() == "0 <= F(x,u) <= U(x) u");
    REQUIRE(r.checks[1].witness_u.has_value());
    CHECK(*r.checks[1].witness_u > 2.0);
    CHECK(r.checks[1].witness.has_value());
  }
  SUBCASE("U = 4 passes the bound but not the contraction gate") {
    const Problem p = parse_problem(ball_doc("u^2", "4", "3", "4", R"(, "solver": {"grid_h": 0.5})"));
    const ValidationReport r = validate(p, quick());
    CHECK_FALSE(r.pass);
    CHECK(r.first_failure() == "contraction sup phi < d/(R^2 C)");
    REQUIRE(r.contraction.has_value());
    CHECK(r.contraction->C_tilde >= 1.0);
  }
  SUBCASE("negative reaction") {
    const Problem p = parse_problem(ball_doc("-u", "1", "1", "2"));
    const ValidationReport r = validate(p, quick());
    CHECK(r.first_failure() == "0 <= F(x,u) <= U(x) u");
    CHECK(r.checks[1].detail.find("F >= 0") != std::string::npos);
    CHECK(r.checks[1].witness_u.has_value());
    // Dependent gates are skipped, not evaluated.
    CHECK(r.checks[3].detail.find("skipped") != std::string::npos);
    CHECK_FALSE(r.lambda.has_value());
  }
  SUBCASE("non-positive bound") {
    const Problem p = parse_problem(ball_doc("0", "x1", "1", "2"));
    const ValidationReport r = validate(p, quick());
    CHECK(r.first_failure() == "U > 0");
    REQUIRE(r.checks[0].witness.has_value());
    CHECK((*r.checks[0].witness)[0] <= 0.0);
  }
  SUBCASE("boundary data reaching b") {
    const Problem p = parse_problem(ball_doc("0", "1", "1 + x3", "1.5"));
    const ValidationReport r = validate(p, quick());
    CHECK(r.first_failure() == "phi >= 0, bounded, sup phi < b");
    REQUIRE(r.checks[2].witness.has_value());
    CHECK((*r.checks[2].witness)[2] >= 0.5 - 1e-12);
  }
  SUBCASE("evaluation errors fail the check instead of escaping") {
    const Problem p = parse_problem(ball_doc("0", "1", "log(x1)", "2"));
    const ValidationReport r = validate(p, quick());
    CHECK(r.first_failure() == "phi >= 0, bounded, sup phi < b");
    CHECK(r.checks[2].detail.find("evaluation error") != std::string::npos);
  }
}

TEST_CASE("validation is deterministic for a given seed") {
  const Problem p = parse_problem(ball_doc("u^2", "2", "3", "4", R"(, "solver": {"grid_h": 0.5})"));
  const ValidationReport a = validate(p, quick(5));
  const ValidationReport b = validate(p, quick(5));
  REQUIRE(a.checks.size() == b.checks.size());
  for (std::size_t i = 0; i < a.checks.size(); ++i) {
    CHECK(a.checks[i].pass == b.checks[i].pass);
    CHECK(a.checks[i].detail == b.checks[i].detail);
  }
  CHECK(*a.checks[1].witness_u == *b.checks[1].witness_u);

  const Problem ok = parse_problem(ball_doc("u^2", "2", "1", "2", R"(, "solver": {"grid_h": 0.5})"));
  ValidationOptions one = quick(9), many = quick(9);
  one.exec.threads = 1;
  many.exec.threads = 3;
  const ValidationReport c = validate(ok, one), d = validate(ok, many);
  REQUIRE(c.lambda.has_value());
  CHECK(c.lambda->beta == d.lambda->beta);
  CHECK(c.lambda->m_tilde == d.lambda->m_tilde);
  CHECK(c.contraction->C == d.contraction->C);
}
