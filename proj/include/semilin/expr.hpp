#pragma once

// Arithmetic expression language used by problem files.
//
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?          right-associative, binds tighter than unary minus
//   atom   := number | variable | call | '(' expr ')'
//   call   := name '(' expr (',' expr)* ')'
//
// Variables: x1..xd (coordinates), r (= |x|), u (only for the F role).
// Functions: sin cos exp log sqrt abs (1 argument), min max (2), step (1),
// with step(t) = 1 for t > 0 and 0 otherwise.

#include "semilin/types.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace semilin {

/// Which problem slot an expression fills; decides the admissible variables.
enum class Role { F, U, Phi, Domain };

const char* role_name(Role role);

enum class Func : std::uint8_t { Sin, Cos, Exp, Log, Sqrt, Abs, Min, Max, Step };

int arity(Func f);
const char* func_name(Func f);

class Expr {
 public:
  enum class Kind : std::uint8_t { Number, Coord, Radius, U, Neg, Add, Sub, Mul, Div, Pow, Call };

  struct Node {
    Kind kind;
    Func func = Func::Sin;   // Call only
    int index = 0;           // Coord: zero-based coordinate
    double number = 0.0;     // Number only
    std::size_t offset = 0;  // byte offset in the source
    std::vector<int> children;
  };

  Expr() = default;

  /// Parses `source` for the given role in dimension `dimension`.
  /// Throws ParseError with the byte offset of the offending token.
  static Expr parse(std::string_view source, Role role, int dimension);

  /// Builds an expression from a node tree (used by generators in tests).
  static Expr from_nodes(std::vector<Node> nodes, int root, Role role, int dimension);

  /// Evaluates at coordinates `x` (size must equal the dimension) and, for
  /// the F role, the unknown `u`. Math domain errors throw EvalError.
  double operator()(std::span<const double> x, double u) const;
  double operator()(std::span<const double> x) const;
  double operator()(const Point& x, double u) const { return (*this)(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), u); }
  double operator()(const Point& x) const { return (*this)(std::span<const double>(x.data(), static_cast<std::size_t>(x.size()))); }

  /// Evaluates with named bindings ("x1", "u", "r", ...). A binding for r is
  /// optional; if absent it is computed from the coordinates.
  double eval(const std::map<std::string, double>& bindings) const;

  /// Canonical text with minimal parentheses; parse(to_string()) reproduces the tree.
  std::string to_string() const;

  const std::string& source() const { return source_; }
  Role role() const { return role_; }
  int dimension() const { return dimension_; }
  bool uses_u() const { return uses_u_; }
  bool is_constant() const { return constant_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  int root() const { return root_; }

 private:
  struct Instr {
    Kind kind;
    Func func;
    int index;
    double number;
    int node;
  };

  void finalize();
  [[noreturn]] void domain_error(int node, const char* what, double arg) const;

  std::string source_;
  Role role_ = Role::U;
  int dimension_ = 0;
  std::vector<Node> nodes_;
  int root_ = -1;
  std::vector<Instr> program_;
  std::size_t max_depth_ = 0;
  bool uses_u_ = false;
  bool uses_r_ = false;
  bool constant_ = false;
};

}  // namespace semilin
