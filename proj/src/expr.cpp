#include "semilin/expr.hpp"

#include "semilin/errors.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace semilin {

const char* role_name(Role role) {
  switch (role) {
    case Role::F: return "F";
    case Role::U: return "U";
    case Role::Phi: return "phi";
    case Role::Domain: return "domain";
  }
  return "?";
}

int arity(Func f) { return (f == Func::Min || f == Func::Max) ? 2 : 1; }

const char* func_name(Func f) {
  switch (f) {
    case Func::Sin: return "sin";
    case Func::Cos: return "cos";
    case Func::Exp: return "exp";
    case Func::Log: return "log";
    case Func::Sqrt: return "sqrt";
    case Func::Abs: return "abs";
    case Func::Min: return "min";
    case Func::Max: return "max";
    case Func::Step: return "step";
  }
  return "?";
}

namespace {

bool lookup_func(std::string_view name, Func& out) {
  static constexpr std::array<Func, 9> all = {Func::Sin, Func::Cos, Func::Exp, Func::Log, Func::Sqrt,
                                              Func::Abs, Func::Min, Func::Max, Func::Step};
  for (Func f : all) {
    if (name == func_name(f)) {
      out = f;
      return true;
    }
  }
  return false;
}

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
  Tok kind;
  std::size_t offset;
  std::string_view text;
  double number = 0.0;
};

class Parser {
 public:
  Parser(std::string_view src, Role role, int dim) : src_(src), role_(role), dim_(dim) { advance(); }

  int parse_all() {
    const int root = expr();
    if (tok_.kind != Tok::End) fail("unexpected token '" + std::string(tok_.text) + "'");
    return root;
  }

  std::vector<Expr::Node> take() { return std::move(nodes_); }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError("syntax error: " + what, tok_.offset); }

  void advance() {
    std::size_t i = pos_;
    while (i < src_.size() && std::isspace(static_cast<unsigned char>(src_[i]))) ++i;
    tok_ = Token{Tok::End, i, {}};
    if (i >= src_.size()) {
      pos_ = i;
      return;
    }
    const char c = src_[i];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t j = i;
      while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
      if (j < src_.size() && src_[j] == '.') {
        ++j;
        while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
      }
      if (j < src_.size() && (src_[j] == 'e' || src_[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src_.size() && (src_[k] == '+' || src_[k] == '-')) ++k;
        if (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) {
          while (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) ++k;
          j = k;
        }
      }
      tok_.kind = Tok::Number;
      tok_.text = src_.substr(i, j - i);
      if (tok_.text == ".") fail("malformed number");
      // from_chars rejects a leading '.', so pad it.
      std::string buf = tok_.text.front() == '.' ? "0" + std::string(tok_.text) : std::string(tok_.text);
      auto [p, ec] = std::from_chars(buf.data(), buf.data() + buf.size(), tok_.number);
      if (ec != std::errc() || p != buf.data() + buf.size()) fail("malformed number");
      pos_ = j;
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_')) ++j;
      tok_.kind = Tok::Ident;
      tok_.text = src_.substr(i, j - i);
      pos_ = j;
      return;
    }
    tok_.text = src_.substr(i, 1);
    switch (c) {
      case '+': tok_.kind = Tok::Plus; break;
      case '-': tok_.kind = Tok::Minus; break;
      case '*': tok_.kind = Tok::Star; break;
      case '/': tok_.kind = Tok::Slash; break;
      case '^': tok_.kind = Tok::Caret; break;
      case '(': tok_.kind = Tok::LParen; break;
      case ')': tok_.kind = Tok::RParen; break;
      case ',': tok_.kind = Tok::Comma; break;
      default: fail("unexpected character '" + std::string(1, c) + "'");
    }
    pos_ = i + 1;
  }

  int add(Expr::Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  int binary(Expr::Kind kind, std::size_t offset, int lhs, int rhs) {
    return add(Expr::Node{kind, Func::Sin, 0, 0.0, offset, {lhs, rhs}});
  }

  int expr() {
    int lhs = term();
    while (tok_.kind == Tok::Plus || tok_.kind == Tok::Minus) {
      const auto kind = tok_.kind == Tok::Plus ? Expr::Kind::Add : Expr::Kind::Sub;
      const auto off = tok_.offset;
      advance();
      lhs = binary(kind, off, lhs, term());
    }
    return lhs;
  }

  int term() {
    int lhs = unary();
    while (tok_.kind == Tok::Star || tok_.kind == Tok::Slash) {
      const auto kind = tok_.kind == Tok::Star ? Expr::Kind::Mul : Expr::Kind::Div;
      const auto off = tok_.offset;
      advance();
      lhs = binary(kind, off, lhs, unary());
    }
    return lhs;
  }

  int unary() {
    if (tok_.kind == Tok::Minus) {
      const auto off = tok_.offset;
      advance();
      const int operand = unary();
      return add(Expr::Node{Expr::Kind::Neg, Func::Sin, 0, 0.0, off, {operand}});
    }
    return power();
  }

  int power() {
    const int base = atom();
    if (tok_.kind == Tok::Caret) {
      const auto off = tok_.offset;
      advance();
      return binary(Expr::Kind::Pow, off, base, unary());
    }
    return base;
  }

  int atom() {
    const Token t = tok_;
    switch (t.kind) {
      case Tok::Number:
        advance();
        return add(Expr::Node{Expr::Kind::Number, Func::Sin, 0, t.number, t.offset, {}});
      case Tok::LParen: {
        advance();
        const int inner = expr();
        if (tok_.kind != Tok::RParen) fail("expected ')'");
        advance();
        return inner;
      }
      case Tok::Ident: return identifier(t);
      case Tok::End: fail("unexpected end of input");
      default: fail("unexpected token '" + std::string(t.text) + "'");
    }
  }

  int identifier(const Token& t) {
    advance();
    Func f;
    if (lookup_func(t.text, f)) {
      if (tok_.kind != Tok::LParen) throw ParseError("function '" + std::string(t.text) + "' requires arguments", t.offset);
      advance();
      std::vector<int> args;
      if (tok_.kind != Tok::RParen) {
        args.push_back(expr());
        while (tok_.kind == Tok::Comma) {
          advance();
          args.push_back(expr());
        }
      }
      if (tok_.kind != Tok::RParen) fail("expected ')' or ','");
      advance();
      if (static_cast<int>(args.size()) != arity(f)) {
        throw ParseError("arity mismatch: " + std::string(func_name(f)) + " takes " + std::to_string(arity(f)) +
                             " argument(s), got " + std::to_string(args.size()),
                         t.offset);
      }
      return add(Expr::Node{Expr::Kind::Call, f, 0, 0.0, t.offset, std::move(args)});
    }
    if (tok_.kind == Tok::LParen) throw ParseError("unknown function '" + std::string(t.text) + "'", t.offset);
    if (t.text == "u") {
      if (role_ != Role::F) {
        throw ParseError(std::string("role violation: u is not allowed in ") + role_name(role_), t.offset);
      }
      return add(Expr::Node{Expr::Kind::U, Func::Sin, 0, 0.0, t.offset, {}});
    }
    if (t.text == "r") return add(Expr::Node{Expr::Kind::Radius, Func::Sin, 0, 0.0, t.offset, {}});
    if (t.text.size() >= 2 && t.text[0] == 'x') {
      int k = 0;
      auto [p, ec] = std::from_chars(t.text.data() + 1, t.text.data() + t.text.size(), k);
      if (ec == std::errc() && p == t.text.data() + t.text.size() && t.text[1] != '0') {
        if (k < 1 || k > dim_) {
          throw ParseError("coordinate " + std::string(t.text) + " out of range for dimension " + std::to_string(dim_),
                           t.offset);
        }
        return add(Expr::Node{Expr::Kind::Coord, Func::Sin, k - 1, 0.0, t.offset, {}});
      }
    }
    throw ParseError("unknown identifier '" + std::string(t.text) + "'", t.offset);
  }

  std::string_view src_;
  Role role_;
  int dim_;
  std::size_t pos_ = 0;
  Token tok_{Tok::End, 0, {}};
  std::vector<Expr::Node> nodes_;
};

int precedence(Expr::Kind k) {
  switch (k) {
    case Expr::Kind::Add:
    case Expr::Kind::Sub: return 1;
    case Expr::Kind::Mul:
    case Expr::Kind::Div: return 2;
    case Expr::Kind::Neg: return 3;
    case Expr::Kind::Pow: return 4;
    default: return 5;
  }
}

// A negative literal prints with a leading '-', so it binds like unary minus.
int precedence_of(const std::vector<Expr::Node>& nodes, int id) {
  const auto& n = nodes[static_cast<std::size_t>(id)];
  if (n.kind == Expr::Kind::Number && std::signbit(n.number)) return 3;
  return precedence(n.kind);
}

void print(const std::vector<Expr::Node>& nodes, int id, std::ostringstream& out);

void print_wrapped(const std::vector<Expr::Node>& nodes, int id, bool parens, std::ostringstream& out) {
  if (parens) out << '(';
  print(nodes, id, out);
  if (parens) out << ')';
}

void print(const std::vector<Expr::Node>& nodes, int id, std::ostringstream& out) {
  const auto& n = nodes[static_cast<std::size_t>(id)];
  switch (n.kind) {
    case Expr::Kind::Number: {
      std::array<char, 64> buf{};
      auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), n.number);
      out << std::string_view(buf.data(), static_cast<std::size_t>(p - buf.data()));
      return;
    }
    case Expr::Kind::Coord: out << 'x' << (n.index + 1); return;
    case Expr::Kind::Radius: out << 'r'; return;
    case Expr::Kind::U: out << 'u'; return;
    case Expr::Kind::Neg:
      out << '-';
      print_wrapped(nodes, n.children[0], precedence_of(nodes, n.children[0]) < 3, out);
      return;
    case Expr::Kind::Call:
      out << func_name(n.func) << '(';
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i) out << ", ";
        print(nodes, n.children[i], out);
      }
      out << ')';
      return;
    case Expr::Kind::Pow: {
      const int lp = precedence_of(nodes, n.children[0]);
      const int rp = precedence_of(nodes, n.children[1]);
      print_wrapped(nodes, n.children[0], lp <= 4, out);
      out << '^';
      print_wrapped(nodes, n.children[1], rp < 3, out);
      return;
    }
    default: {
      const int p = precedence(n.kind);
      const int lp = precedence_of(nodes, n.children[0]);
      const int rp = precedence_of(nodes, n.children[1]);
      print_wrapped(nodes, n.children[0], lp < p, out);
      switch (n.kind) {
        case Expr::Kind::Add: out << " + "; break;
        case Expr::Kind::Sub: out << " - "; break;
        case Expr::Kind::Mul: out << " * "; break;
        default: out << " / "; break;
      }
      print_wrapped(nodes, n.children[1], rp <= p, out);
      return;
    }
  }
}

}  // namespace

Expr Expr::parse(std::string_view source, Role role, int dimension) {
  Parser parser(source, role, dimension);
  Expr e;
  e.root_ = parser.parse_all();
  e.nodes_ = parser.take();
  e.source_ = std::string(source);
  e.role_ = role;
  e.dimension_ = dimension;
  e.finalize();
  return e;
}

Expr Expr::from_nodes(std::vector<Node> nodes, int root, Role role, int dimension) {
  Expr e;
  e.nodes_ = std::move(nodes);
  e.root_ = root;
  e.role_ = role;
  e.dimension_ = dimension;
  for (const auto& n : e.nodes_) {
    if (n.kind == Kind::U && role != Role::F) throw InputError("role violation: u is not allowed");
    if (n.kind == Kind::Coord && (n.index < 0 || n.index >= dimension)) throw InputError("coordinate out of range");
    if (n.kind == Kind::Call && static_cast<int>(n.children.size()) != arity(n.func)) throw InputError("arity mismatch");
  }
  e.finalize();
  e.source_ = e.to_string();
  return e;
}

void Expr::finalize() {
  program_.clear();
  uses_u_ = uses_r_ = false;
  // Post-order flattening; depth tracking gives the evaluation stack size.
  std::size_t depth = 0;
  max_depth_ = 0;
  auto emit = [&](auto&& self, int id) -> void {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    for (int c : n.children) self(self, c);
    program_.push_back(Instr{n.kind, n.func, n.index, n.number, id});
    if (n.kind == Kind::U) uses_u_ = true;
    if (n.kind == Kind::Radius) uses_r_ = true;
    depth = depth + 1 - n.children.size();
    max_depth_ = std::max(max_depth_, depth);
  };
  emit(emit, root_);
  constant_ = true;
  for (const auto& in : program_) {
    if (in.kind == Kind::Coord || in.kind == Kind::Radius || in.kind == Kind::U) constant_ = false;
  }
}

void Expr::domain_error(int node, const char* what, double arg) const {
  const auto& n = nodes_[static_cast<std::size_t>(node)];
  std::ostringstream msg;
  msg << "math domain error: " << what << " of " << arg << " (node at offset " << n.offset << " in '" << source_
      << "')";
  throw EvalError(msg.str());
}

double Expr::operator()(std::span<const double> x) const {
  if (uses_u_) throw EvalError("missing binding for u in '" + source_ + "'");
  return (*this)(x, 0.0);
}

double Expr::operator()(std::span<const double> x, double u) const {
  if (static_cast<int>(x.size()) != dimension_) {
    throw InputError("expression '" + source_ + "' expects " + std::to_string(dimension_) + " coordinates, got " +
                     std::to_string(x.size()));
  }
  double radius = 0.0;
  if (uses_r_) {
    for (double c : x) radius += c * c;
    radius = std::sqrt(radius);
  }
  constexpr std::size_t kInline = 32;
  std::array<double, kInline> inline_stack{};
  std::vector<double> heap_stack;
  double* stack = inline_stack.data();
  if (max_depth_ > kInline) {
    heap_stack.resize(max_depth_);
    stack = heap_stack.data();
  }
  std::size_t sp = 0;
  for (const Instr& in : program_) {
    switch (in.kind) {
      case Kind::Number: stack[sp++] = in.number; break;
      case Kind::Coord: stack[sp++] = x[static_cast<std::size_t>(in.index)]; break;
      case Kind::Radius: stack[sp++] = radius; break;
      case Kind::U: stack[sp++] = u; break;
      case Kind::Neg: stack[sp - 1] = -stack[sp - 1]; break;
      case Kind::Add: --sp; stack[sp - 1] = stack[sp - 1] + stack[sp]; break;
      case Kind::Sub: --sp; stack[sp - 1] = stack[sp - 1] - stack[sp]; break;
      case Kind::Mul: --sp; stack[sp - 1] = stack[sp - 1] * stack[sp]; break;
      case Kind::Div:
        --sp;
        if (stack[sp] == 0.0) domain_error(in.node, "division by zero", stack[sp - 1]);
        stack[sp - 1] = stack[sp - 1] / stack[sp];
        break;
      case Kind::Pow: {
        --sp;
        // x * x is the correctly rounded square, identical to pow(x, 2).
        const double r = stack[sp] == 2.0 ? stack[sp - 1] * stack[sp - 1] : std::pow(stack[sp - 1], stack[sp]);
        if (std::isnan(r) && !std::isnan(stack[sp - 1]) && !std::isnan(stack[sp])) {
          domain_error(in.node, "power", stack[sp - 1]);
        }
        stack[sp - 1] = r;
        break;
      }
      case Kind::Call: {
        double& a = stack[sp - static_cast<std::size_t>(arity(in.func))];
        switch (in.func) {
          case Func::Sin: a = std::sin(a); break;
          case Func::Cos: a = std::cos(a); break;
          case Func::Exp: a = std::exp(a); break;
          case Func::Log:
            if (!(a > 0.0)) domain_error(in.node, "log", a);
            a = std::log(a);
            break;
          case Func::Sqrt:
            if (!(a >= 0.0)) domain_error(in.node, "sqrt", a);
            a = std::sqrt(a);
            break;
          case Func::Abs: a = std::abs(a); break;
          case Func::Min: a = std::min(a, stack[sp - 1]); --sp; break;
          case Func::Max: a = std::max(a, stack[sp - 1]); --sp; break;
          case Func::Step: a = a > 0.0 ? 1.0 : 0.0; break;
        }
        break;
      }
    }
  }
  return stack[0];
}

double Expr::eval(const std::map<std::string, double>& bindings) const {
  std::vector<double> x(static_cast<std::size_t>(dimension_));
  bool have_all = true;
  std::string missing;
  for (int i = 0; i < dimension_; ++i) {
    const auto it = bindings.find("x" + std::to_string(i + 1));
    if (it != bindings.end()) {
      x[static_cast<std::size_t>(i)] = it->second;
    } else {
      have_all = false;
      missing = "x" + std::to_string(i + 1);
    }
  }
  // Only coordinates the expression actually references must be bound.
  if (!have_all) {
    for (const auto& n : nodes_) {
      if (n.kind == Kind::Coord && !bindings.count("x" + std::to_string(n.index + 1))) {
        throw EvalError("missing binding for x" + std::to_string(n.index + 1) + " in '" + source_ + "'");
      }
      if (n.kind == Kind::Radius && !bindings.count("r")) {
        throw EvalError("missing binding for " + missing + " (needed by r) in '" + source_ + "'");
      }
    }
  }
  double u = 0.0;
  if (uses_u_) {
    const auto it = bindings.find("u");
    if (it == bindings.end()) throw EvalError("missing binding for u in '" + source_ + "'");
    u = it->second;
  }
  const auto r_it = bindings.find("r");
  if (r_it == bindings.end() || !uses_r_) return (*this)(std::span<const double>(x), u);
  // Explicit r binding: evaluate a copy whose radius node reads the bound value.
  Expr bound = *this;
  for (auto& in : bound.program_) {
    if (in.kind == Kind::Radius) {
      in.kind = Kind::Number;
      in.number = r_it->second;
    }
  }
  bound.uses_r_ = false;
  return bound(std::span<const double>(x), u);
}

std::string Expr::to_string() const {
  std::ostringstream out;
  print(nodes_, root_, out);
  return out.str();
}

}  // namespace semilin
