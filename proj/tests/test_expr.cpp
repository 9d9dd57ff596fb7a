#include "semilin/errors.hpp"
#include "semilin/expr.hpp"

#include "doctest.h"

#include <cmath>
#include <optional>
#include <random>

using namespace semilin;

namespace {

double eval_at(const std::string& src, Role role, std::vector<double> x, double u = 0.0) {
  const Expr e = Expr::parse(src, role, static_cast<int>(x.size()));
  return role == Role::F ? e(std::span<const double>(x), u) : e(std::span<const double>(x));
}

// Recursive evaluator over the node tree; nullopt stands for a domain error.
std::optional<double> reference(const std::vector<Expr::Node>& nodes, int id, const std::vector<double>& x, double u) {
  using K = Expr::Kind;
  const auto& n = nodes[static_cast<std::size_t>(id)];
  auto child = [&](int i) { return reference(nodes, n.children[static_cast<std::size_t>(i)], x, u); };
  switch (n.kind) {
    case K::Number: return n.number;
    case K::Coord: return x[static_cast<std::size_t>(n.index)];
    case K::Radius: {
      double s = 0.0;
      for (double v : x) s += v * v;
      return std::sqrt(s);
    }
    case K::U: return u;
    case K::Neg: {
      auto a = child(0);
      if (!a) return std::nullopt;
      return -*a;
    }
    case K::Call: {
      auto a = child(0);
      if (!a) return std::nullopt;
      switch (n.func) {
        case Func::Sin: return std::sin(*a);
        case Func::Cos: return std::cos(*a);
        case Func::Exp: return std::exp(*a);
        case Func::Log:
          if (!(*a > 0.0)) return std::nullopt;
          return std::log(*a);
        case Func::Sqrt:
          if (!(*a >= 0.0)) return std::nullopt;
          return std::sqrt(*a);
        case Func::Abs: return std::fabs(*a);
        case Func::Step: return *a > 0.0 ? 1.0 : 0.0;
        case Func::Min:
        case Func::Max: {
          auto b = child(1);
          if (!b) return std::nullopt;
          if (n.func == Func::Min) return (*b < *a) ? *b : *a;
          return (*a < *b) ? *b : *a;
        }
      }
      return std::nullopt;
    }
    default: {
      auto a = child(0);
      if (!a) return std::nullopt;
      auto b = child(1);
      if (!b) return std::nullopt;
      switch (n.kind) {
        case K::Add: return *a + *b;
        case K::Sub: return *a - *b;
        case K::Mul: return *a * *b;
        case K::Div:
          if (*b == 0.0) return std::nullopt;
          return *a / *b;
        case K::Pow: {
          // A square is exactly rounded either way.
          const double r = *b == 2.0 ? *a * *a : std::pow(*a, *b);
          if (std::isnan(r) && !std::isnan(*a) && !std::isnan(*b)) return std::nullopt;
          return r;
        }
        default: return std::nullopt;
      }
    }
  }
}

struct Generator {
  std::mt19937_64 rng;
  int dim;
  std::vector<Expr::Node> nodes;

  int leaf() {
    using K = Expr::Kind;
    std::uniform_int_distribution<int> pick(0, 5);
    Expr::Node n{K::Number, Func::Sin, 0, 0.0, 0, {}};
    switch (pick(rng)) {
      case 0:
      case 1: {
        std::uniform_int_distribution<int> small(-9, 9);
        std::uniform_real_distribution<double> real(-3.0, 3.0);
        n.number = (rng() % 2) ? static_cast<double>(small(rng)) : real(rng);
        break;
      }
      case 2:
      case 3:
        n.kind = K::Coord;
        n.index = static_cast<int>(rng() % static_cast<unsigned>(dim));
        break;
      case 4: n.kind = K::Radius; break;
      default: n.kind = K::U; break;
    }
    nodes.push_back(n);
    return static_cast<int>(nodes.size()) - 1;
  }

  int tree(int depth) {
    using K = Expr::Kind;
    if (depth == 0 || rng() % 4 == 0) return leaf();
    Expr::Node n{K::Add, Func::Sin, 0, 0.0, 0, {}};
    switch (rng() % 8) {
      case 0: n.kind = K::Add; break;
      case 1: n.kind = K::Sub; break;
      case 2: n.kind = K::Mul; break;
      case 3: n.kind = K::Div; break;
      case 4: n.kind = K::Pow; break;
      case 5: n.kind = K::Neg; break;
      default:
        n.kind = K::Call;
        n.func = static_cast<Func>(rng() % 9);
        break;
    }
    const int children = n.kind == K::Neg ? 1 : n.kind == K::Call ? arity(n.func) : 2;
    for (int i = 0; i < children; ++i) {
      if (n.kind == K::Pow && i == 1) {
        // Small exponents keep values finite often enough to be interesting.
        static const double exps[] = {2.0, 3.0, 0.5, -1.0, 1.5};
        nodes.push_back(Expr::Node{K::Number, Func::Sin, 0, exps[rng() % 5], 0, {}});
        n.children.push_back(static_cast<int>(nodes.size()) - 1);
      } else {
        n.children.push_back(tree(depth - 1));
      }
    }
    nodes.push_back(n);
    return static_cast<int>(nodes.size()) - 1;
  }
};

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

}  // namespace

TEST_CASE("parse examples") {
  const Expr sq = Expr::parse("u^2", Role::F, 3);
  const auto& root = sq.nodes()[static_cast<std::size_t>(sq.root())];
  CHECK(root.kind == Expr::Kind::Pow);
  CHECK(sq.nodes()[static_cast<std::size_t>(root.children[0])].kind == Expr::Kind::U);
  CHECK(sq.uses_u());

  const Expr st = Expr::parse("step(x3)", Role::Phi, 3);
  CHECK(st.nodes()[static_cast<std::size_t>(st.root())].kind == Expr::Kind::Call);
  CHECK(st(Point(Eigen::Vector3d(0, 0, 0.2))) == 1.0);
  CHECK(st(Point(Eigen::Vector3d(0, 0, 0.0))) == 0.0);
  CHECK(st(Point(Eigen::Vector3d(0, 0, -0.2))) == 0.0);
}

TEST_CASE("syntax errors carry byte offsets") {
  try {
    (void)Expr::parse("x1 + * 2", Role::U, 3);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 5);
    CHECK(std::string(e.what()).find("offset 5") != std::string::npos);
  }
  CHECK_THROWS_AS((void)Expr::parse("(x1 + 2", Role::U, 3), ParseError);
  CHECK_THROWS_AS((void)Expr::parse("x1 2", Role::U, 3), ParseError);
  CHECK_THROWS_AS((void)Expr::parse("", Role::U, 3), ParseError);
}

TEST_CASE("identifier, arity and role checks") {
  CHECK_THROWS_WITH_AS((void)Expr::parse("y1 + 1", Role::U, 3), doctest::Contains("unknown identifier"), ParseError);
  CHECK_THROWS_AS((void)Expr::parse("x4", Role::U, 3), ParseError);
  CHECK_THROWS_AS((void)Expr::parse("foo(1)", Role::U, 3), ParseError);
  CHECK_THROWS_WITH_AS((void)Expr::parse("min(1)", Role::U, 3), doctest::Contains("arity"), ParseError);
  CHECK_THROWS_AS((void)Expr::parse("sin(1, 2)", Role::U, 3), ParseError);
  CHECK_THROWS_WITH_AS((void)Expr::parse("1 + u", Role::Phi, 3), doctest::Contains("role violation"), ParseError);
  CHECK_THROWS_AS((void)Expr::parse("u", Role::U, 3), ParseError);
  CHECK_NOTHROW((void)Expr::parse("u * x1", Role::F, 3));
}

TEST_CASE("evaluation examples") {
  CHECK(Expr::parse("x1^2 + u", Role::F, 1 + 2).eval({{"x1", 2.0}, {"u", 3.0}}) == 7.0);
  CHECK(Expr::parse("min(1, exp(0))", Role::U, 3).eval({}) == 1.0);
  CHECK_THROWS_AS(Expr::parse("sqrt(x1)", Role::U, 3).eval({{"x1", -1.0}}), EvalError);
  CHECK_THROWS_AS(Expr::parse("log(x1)", Role::U, 3).eval({{"x1", 0.0}}), EvalError);
  CHECK_THROWS_AS(Expr::parse("1 / x1", Role::U, 3).eval({{"x1", 0.0}}), EvalError);
  CHECK_THROWS_AS(Expr::parse("x1 + x2", Role::U, 3).eval({{"x1", 1.0}}), EvalError);
  CHECK_THROWS_AS(Expr::parse("u", Role::F, 3).eval({}), EvalError);
}

TEST_CASE("precedence and associativity") {
  CHECK(eval_at("-2^2", Role::U, {0, 0, 0}) == -4.0);
  CHECK(eval_at("2^3^2", Role::U, {0, 0, 0}) == 512.0);
  CHECK(eval_at("2^-1", Role::U, {0, 0, 0}) == 0.5);
  CHECK(eval_at("1 - 2 - 3", Role::U, {0, 0, 0}) == -4.0);
  CHECK(eval_at("8 / 4 / 2", Role::U, {0, 0, 0}) == 1.0);
  CHECK(eval_at("1 + 2 * 3", Role::U, {0, 0, 0}) == 7.0);
  CHECK(eval_at("  ( 1+2 )*3 ", Role::U, {0, 0, 0}) == 9.0);
  CHECK(eval_at("r", Role::U, {3, 4, 0}) == 5.0);
  CHECK(eval_at("1.5e1 + .5", Role::U, {0, 0, 0}) == 15.5);
  CHECK(eval_at("max(x1, x2) - abs(x3)", Role::U, {1, 2, -3}) == -1.0);
}

TEST_CASE("pretty printing round-trips to a fixed point") {
  Generator gen{std::mt19937_64(12345), 3, {}};
  for (int i = 0; i < 100; ++i) {
    gen.nodes.clear();
    const int root = gen.tree(5);
    const Expr e = Expr::from_nodes(gen.nodes, root, Role::F, 3);
    const std::string once = e.to_string();
    const std::string twice = Expr::parse(once, Role::F, 3).to_string();
    CHECK(once == twice);
  }
  CHECK(Expr::parse("(x1 + 1) * (x2 - 2)", Role::U, 3).to_string() == "(x1 + 1) * (x2 - 2)");
  CHECK(Expr::parse("x1 - (x2 - x3)", Role::U, 3).to_string() == "x1 - (x2 - x3)");
  CHECK(Expr::parse("(2^3)^2", Role::U, 3).to_string() == "(2^3)^2");
  CHECK(Expr::parse("(-2)^2", Role::U, 3).to_string() == "(-2)^2");
}

TEST_CASE("evaluation agrees with a recursive reference on random trees") {
  Generator gen{std::mt19937_64(2024), 3, {}};
  std::mt19937_64 pts(99);
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  int evaluated = 0;
  for (int i = 0; i < 10000; ++i) {
    gen.nodes.clear();
    const int root = gen.tree(6);
    const Expr e = Expr::from_nodes(gen.nodes, root, Role::F, 3);
    const std::vector<double> x{coord(pts), coord(pts), coord(pts)};
    const double u = coord(pts);
    const auto want = reference(gen.nodes, root, x, u);
    if (want) {
      const double got = e(std::span<const double>(x), u);
      if (!same(got, *want)) {
        FAIL_CHECK(e.to_string() << " -> " << got << " vs " << *want);
      }
      ++evaluated;
      // The printed form evaluates identically.
      const double reparsed = Expr::parse(e.to_string(), Role::F, 3)(std::span<const double>(x), u);
      if (!same(reparsed, *want)) FAIL_CHECK("reparse of " << e.to_string());
    } else {
      CHECK_THROWS_AS((void)e(std::span<const double>(x), u), EvalError);
    }
  }
  CHECK(evaluated > 5000);
}
