#include "semilin/problem.hpp"

#include "semilin/errors.hpp"

#include "json.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace semilin {

using json = nlohmann::ordered_json;

SamplerOptions SolverSettings::sampler() const {
  SamplerOptions o;
  o.shell = shell;
  o.dt = dt;
  o.bridge_correction = bridge_correction;
  return o;
}

ScalarField Problem::phi_field() const {
  return [e = phi](const Point& y) { return e(y); };
}

ScalarField Problem::U_field() const {
  return [e = U](const Point& x) { return e(x); };
}

Reaction problem_reaction(const Problem& problem) {
  return [e = problem.F](const Point& x, double u) { return e(x, u); };
}

namespace {

// Walks one JSON object; every key must be consumed before finish().
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw InputError(where() + ": expected an object");
  }

  bool has(const std::string& key) {
    return obj_.contains(key);
  }

  const json& get(const std::string& key) {
    if (!obj_.contains(key)) throw InputError("missing required key \"" + child(key) + "\"");
    used_.insert(key);
    return obj_.at(key);
  }

  const json* find(const std::string& key) {
    if (!obj_.contains(key)) return nullptr;
    used_.insert(key);
    return &obj_.at(key);
  }

  double number(const std::string& key) { return as_number(get(key), child(key)); }
  double number(const std::string& key, double fallback) {
    const json* v = find(key);
    return v ? as_number(*v, child(key)) : fallback;
  }
  std::size_t count(const std::string& key, std::size_t fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
      throw InputError(child(key) + ": expected a non-negative integer");
    }
    return v->get<std::size_t>();
  }
  int integer(const std::string& key, int fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) throw InputError(child(key) + ": expected an integer");
    return v->get<int>();
  }
  bool boolean(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw InputError(child(key) + ": expected true or false");
    return v->get<bool>();
  }
  std::string string(const std::string& key) {
    const json& v = get(key);
    if (!v.is_string()) throw InputError(child(key) + ": expected a string");
    return v.get<std::string>();
  }
  Point point(const std::string& key, int d) { return as_point(get(key), child(key), d); }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!used_.count(it.key())) throw InputError("unknown key \"" + child(it.key()) + "\"");
    }
  }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw InputError(path + ": expected a number");
    return v.get<double>();
  }

  static Point as_point(const json& v, const std::string& path, int d) {
    if (!v.is_array() || static_cast<int>(v.size()) != d) {
      throw InputError(path + ": expected an array of " + std::to_string(d) + " numbers");
    }
    Point p(d);
    for (int i = 0; i < d; ++i) p[i] = as_number(v[static_cast<std::size_t>(i)], path + "[" + std::to_string(i) + "]");
    return p;
  }

 private:
  std::string where() const { return path_.empty() ? "document" : path_; }

  const json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

Expr parse_expr(const json& v, const std::string& path, Role role, int d) {
  if (v.is_number()) return Expr::parse(json(v).dump(), role, d);
  if (!v.is_string()) throw InputError(path + ": expected an expression string");
  try {
    return Expr::parse(v.get<std::string>(), role, d);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

Domain parse_domain(const json& v, int d) {
  Reader r(v, "domain");
  const std::string shape = r.string("shape");
  std::optional<Domain> domain;
  if (shape == "ball") {
    const Point c = r.has("center") ? r.point("center", d) : Point::Zero(d);
    domain = Domain::ball(c, r.number("radius"));
  } else if (shape == "box") {
    domain = Domain::box(r.point("lo", d), r.point("hi", d));
  } else if (shape == "annulus") {
    const Point c = r.has("center") ? r.point("center", d) : Point::Zero(d);
    domain = Domain::annulus(c, r.number("r_in"), r.number("r_out"));
  } else if (shape == "implicit") {
    const json& e = r.get("expression");
    if (!e.is_string()) throw InputError("domain.expression: expected an expression string");
    std::optional<double> R;
    if (const json* rv = r.find("enclosing_radius")) R = Reader::as_number(*rv, "domain.enclosing_radius");
    domain = Domain::implicit(e.get<std::string>(), d, R);
  } else {
    throw InputError("domain.shape: unknown shape \"" + shape + "\" (expected ball, box, annulus or implicit)");
  }
  if (const json* tol = r.find("boundary_tolerance")) {
    domain->set_boundary_tolerance(Reader::as_number(*tol, "domain.boundary_tolerance"));
  }
  r.finish();
  return *domain;
}

ExitMethod parse_method(const std::string& s, const std::string& path) {
  if (s == "wos") return ExitMethod::WalkOnSpheres;
  if (s == "em") return ExitMethod::EulerMaruyama;
  throw InputError(path + ": expected \"wos\" or \"em\"");
}

SolverSettings parse_solver(const json* v, const Domain& domain) {
  const double R = domain.enclosing_radius();
  SolverSettings s;
  s.grid_h = 0.25 * R;
  s.dt = 1e-4 * R * R;
  s.shell = 1e-4 * R;
  s.quadrature_h = 0.05 * R;
  s.bridge_correction = false;
  if (!v) {
    s.paths_max = s.paths;
    return s;
  }
  Reader r(*v, "solver");
  s.grid_h = r.number("grid_h", s.grid_h);
  s.paths = r.count("paths", s.paths);
  s.paths_growth = r.number("paths_growth", s.paths_growth);
  s.paths_max = r.count("paths_max", std::max<std::size_t>(s.paths, s.paths_max));
  s.dt = r.number("dt", s.dt);
  s.bridge_correction = r.boolean("bridge_correction", s.bridge_correction);
  s.shell = r.number("shell", s.shell);
  s.tol = r.number("tol", s.tol);
  s.max_iter = r.integer("max_iter", s.max_iter);
  if (const json* seed = r.find("seed")) {
    if (!seed->is_number_unsigned() && !(seed->is_number_integer() && seed->get<long long>() >= 0)) {
      throw InputError("solver.seed: expected a non-negative integer");
    }
    s.seed = seed->get<std::uint64_t>();
  }
  s.quadrature_h = r.number("quadrature_h", s.quadrature_h);
  s.boundary_samples = r.count("boundary_samples", s.boundary_samples);
  s.safety = r.number("safety", s.safety);
  if (const json* m = r.find("method")) {
    if (!m->is_string()) throw InputError("solver.method: expected a string");
    s.method = parse_method(m->get<std::string>(), "solver.method");
  }
  r.finish();
  if (!(s.grid_h > 0.0)) throw InputError("solver.grid_h: must be positive");
  if (s.paths < 2) throw InputError("solver.paths: must be at least 2");
  if (!(s.paths_growth >= 1.0)) throw InputError("solver.paths_growth: must be >= 1");
  if (s.paths_max < s.paths) throw InputError("solver.paths_max: must be >= solver.paths");
  if (!(s.dt > 0.0)) throw InputError("solver.dt: must be positive");
  if (!(s.shell > 0.0)) throw InputError("solver.shell: must be positive");
  if (!(s.tol >= 0.0)) throw InputError("solver.tol: must be non-negative");
  if (s.max_iter < 1) throw InputError("solver.max_iter: must be >= 1");
  if (!(s.quadrature_h > 0.0)) throw InputError("solver.quadrature_h: must be positive");
  if (s.boundary_samples < 1) throw InputError("solver.boundary_samples: must be >= 1");
  if (!(s.safety >= 0.0 && s.safety < 1.0)) throw InputError("solver.safety: must lie in [0, 1)");
  return s;
}

DiscontinuityPiece parse_piece(const json& v, const std::string& path, int d) {
  Reader r(v, path);
  const std::string type = r.string("type");
  DiscontinuityPiece p;
  if (type == "point") {
    p.kind = DiscontinuityPiece::Kind::Point;
    p.vertices = r.point("point", d);
  } else if (type == "polyline") {
    p.kind = DiscontinuityPiece::Kind::Polyline;
    const json& vs = r.get("vertices");
    if (!vs.is_array() || vs.empty()) throw InputError(path + ".vertices: expected a non-empty array of points");
    p.vertices.resize(d, static_cast<Eigen::Index>(vs.size()));
    for (std::size_t i = 0; i < vs.size(); ++i) {
      p.vertices.col(static_cast<Eigen::Index>(i)) =
          Reader::as_point(vs[i], path + ".vertices[" + std::to_string(i) + "]", d);
    }
    p.closed = r.boolean("closed", false);
  } else if (type == "plane") {
    p.kind = DiscontinuityPiece::Kind::Plane;
    p.normal = r.point("normal", d);
    if (!(p.normal.norm() > 0.0)) throw InputError(path + ".normal: must be non-zero");
    p.offset = r.number("offset", 0.0);
  } else {
    throw InputError(path + ".type: expected point, polyline or plane");
  }
  r.finish();
  return p;
}

DiagnosticsSettings parse_diagnostics(const json* v, const Domain& domain) {
  const int d = domain.dimension();
  const double R = domain.enclosing_radius();
  DiagnosticsSettings s;
  s.shell = 1e-6 * R;
  s.kato_alpha = 0.5 * R;
  s.control_exponent = std::min(1.0, static_cast<double>(d - 2));
  if (!v) return s;
  Reader r(*v, "diagnostics");
  if (const json* ds = r.find("discontinuity_set")) {
    if (!ds->is_array()) throw InputError("diagnostics.discontinuity_set: expected an array");
    std::vector<DiscontinuityPiece> pieces;
    for (std::size_t i = 0; i < ds->size(); ++i) {
      pieces.push_back(parse_piece((*ds)[i], "diagnostics.discontinuity_set[" + std::to_string(i) + "]", d));
    }
    s.discontinuity_set = DiscontinuitySet(std::move(pieces));
  }
  if (const json* sq = r.find("sequences")) {
    Reader q(*sq, "diagnostics.sequences");
    if (const json* t = q.find("targets")) {
      if (!t->is_array()) throw InputError("diagnostics.sequences.targets: expected an array of points");
      for (std::size_t i = 0; i < t->size(); ++i) {
        s.sequences.targets.push_back(
            Reader::as_point((*t)[i], "diagnostics.sequences.targets[" + std::to_string(i) + "]", d));
      }
    }
    s.sequences.count = q.integer("count", s.sequences.count);
    s.sequences.approach.terms = q.integer("terms", s.sequences.approach.terms);
    s.sequences.approach.decay = q.number("decay", s.sequences.approach.decay);
    s.sequences.approach.start_distance = q.number("start_distance", s.sequences.approach.start_distance);
    s.sequences.approach.angle = q.number("angle", s.sequences.approach.angle);
    s.sequences.tail = q.integer("tail", s.sequences.tail);
    q.finish();
  }
  if (const json* c = r.find("control")) {
    Reader q(*c, "diagnostics.control");
    s.control_exponent = q.number("exponent", s.control_exponent);
    s.control_cap = q.number("cap", s.control_cap);
    q.finish();
  }
  s.k_threshold = r.number("k_threshold", s.k_threshold);
  s.tolerance = r.number("tolerance", s.tolerance);
  s.paths = r.count("paths", s.paths);
  s.shell = r.number("shell", s.shell);
  if (const json* bs = r.find("bumps")) {
    if (!bs->is_array()) throw InputError("diagnostics.bumps: expected an array");
    for (std::size_t i = 0; i < bs->size(); ++i) {
      const std::string path = "diagnostics.bumps[" + std::to_string(i) + "]";
      Reader q((*bs)[i], path);
      BumpFunction bump;
      bump.center = q.point("center", d);
      bump.radius = q.number("radius");
      q.finish();
      s.bumps.push_back(std::move(bump));
    }
  }
  s.kato_alpha = r.number("kato_alpha", s.kato_alpha);
  s.kato_levels = r.integer("kato_levels", s.kato_levels);
  r.finish();
  if (s.sequences.count < 0) throw InputError("diagnostics.sequences.count: must be >= 0");
  if (s.sequences.tail < 1) throw InputError("diagnostics.sequences.tail: must be >= 1");
  if (s.paths < 2) throw InputError("diagnostics.paths: must be at least 2");
  if (!(s.shell > 0.0)) throw InputError("diagnostics.shell: must be positive");
  if (!(s.kato_alpha > 0.0)) throw InputError("diagnostics.kato_alpha: must be positive");
  if (s.kato_levels < 1) throw InputError("diagnostics.kato_levels: must be >= 1");
  return s;
}

json point_json(const Point& p) {
  json a = json::array();
  for (Eigen::Index i = 0; i < p.size(); ++i) a.push_back(p[i]);
  return a;
}

json domain_json(const Domain& domain) {
  json o;
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, BallShape>) {
          o["shape"] = "ball";
          o["center"] = point_json(s.center);
          o["radius"] = s.radius;
        } else if constexpr (std::is_same_v<S, BoxShape>) {
          o["shape"] = "box";
          o["lo"] = point_json(s.lo);
          o["hi"] = point_json(s.hi);
        } else if constexpr (std::is_same_v<S, AnnulusShape>) {
          o["shape"] = "annulus";
          o["center"] = point_json(s.center);
          o["r_in"] = s.r_in;
          o["r_out"] = s.r_out;
        } else {
          o["shape"] = "implicit";
          o["expression"] = s.sdf->source();
          o["enclosing_radius"] = domain.enclosing_radius();
        }
      },
      domain.shape());
  o["boundary_tolerance"] = domain.boundary_tolerance();
  return o;
}

}  // namespace

Problem parse_problem(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("problem file is not valid JSON: ") + e.what(), e.byte);
  }
  Reader r(doc, "");
  const json& dv = r.get("dimension");
  if (!dv.is_number_integer()) throw InputError("dimension: expected an integer");
  Problem p;
  p.dimension = dv.get<int>();
  if (p.dimension < 3) throw InputError("dimension: must be at least 3");
  p.domain = parse_domain(r.get("domain"), p.dimension);
  p.F = parse_expr(r.get("F"), "F", Role::F, p.dimension);
  p.U = parse_expr(r.get("U"), "U", Role::U, p.dimension);
  p.phi = parse_expr(r.get("phi"), "phi", Role::Phi, p.dimension);
  if (const json* b = r.find("b")) {
    if (b->is_string() && (b->get<std::string>() == "inf" || b->get<std::string>() == "infinity")) {
      p.b = std::numeric_limits<double>::infinity();
    } else {
      p.b = Reader::as_number(*b, "b");
      if (!(p.b > 0.0)) throw InputError("b: must be positive (or \"inf\")");
    }
  }
  if (const json* a = r.find("analytic_reference")) {
    p.analytic_reference = parse_expr(*a, "analytic_reference", Role::U, p.dimension);
  }
  p.solver = parse_solver(r.find("solver"), p.domain);
  p.diagnostics = parse_diagnostics(r.find("diagnostics"), p.domain);
  r.finish();
  return p;
}

Problem load_problem(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open problem file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_problem(text.str());
}

std::string save_problem(const Problem& p) {
  json doc;
  doc["dimension"] = p.dimension;
  doc["domain"] = domain_json(p.domain);
  doc["F"] = p.F.to_string();
  doc["U"] = p.U.to_string();
  doc["phi"] = p.phi.to_string();
  if (std::isinf(p.b)) {
    doc["b"] = "inf";
  } else {
    doc["b"] = p.b;
  }
  if (p.analytic_reference) doc["analytic_reference"] = p.analytic_reference->to_string();

  const SolverSettings& s = p.solver;
  json sv;
  sv["grid_h"] = s.grid_h;
  sv["paths"] = s.paths;
  sv["paths_growth"] = s.paths_growth;
  sv["paths_max"] = s.paths_max;
  sv["dt"] = s.dt;
  sv["bridge_correction"] = s.bridge_correction;
  sv["shell"] = s.shell;
  sv["tol"] = s.tol;
  sv["max_iter"] = s.max_iter;
  sv["seed"] = s.seed;
  sv["quadrature_h"] = s.quadrature_h;
  sv["boundary_samples"] = s.boundary_samples;
  sv["safety"] = s.safety;
  sv["method"] = method_name(s.method);
  doc["solver"] = sv;

  const DiagnosticsSettings& g = p.diagnostics;
  json dg;
  json pieces = json::array();
  for (const auto& piece : g.discontinuity_set.pieces()) {
    json o;
    switch (piece.kind) {
      case DiscontinuityPiece::Kind::Point:
        o["type"] = "point";
        o["point"] = point_json(piece.vertices.col(0));
        break;
      case DiscontinuityPiece::Kind::Polyline: {
        o["type"] = "polyline";
        json vs = json::array();
        for (Eigen::Index i = 0; i < piece.vertices.cols(); ++i) vs.push_back(point_json(piece.vertices.col(i)));
        o["vertices"] = vs;
        o["closed"] = piece.closed;
        break;
      }
      case DiscontinuityPiece::Kind::Plane:
        o["type"] = "plane";
        o["normal"] = point_json(piece.normal);
        o["offset"] = piece.offset;
        break;
    }
    pieces.push_back(o);
  }
  dg["discontinuity_set"] = pieces;
  json sq;
  json targets = json::array();
  for (const auto& t : g.sequences.targets) targets.push_back(point_json(t));
  sq["targets"] = targets;
  sq["count"] = g.sequences.count;
  sq["terms"] = g.sequences.approach.terms;
  sq["decay"] = g.sequences.approach.decay;
  sq["start_distance"] = g.sequences.approach.start_distance;
  sq["angle"] = g.sequences.approach.angle;
  sq["tail"] = g.sequences.tail;
  dg["sequences"] = sq;
  dg["control"] = json{{"exponent", g.control_exponent}, {"cap", g.control_cap}};
  dg["k_threshold"] = g.k_threshold;
  dg["tolerance"] = g.tolerance;
  dg["paths"] = g.paths;
  dg["shell"] = g.shell;
  json bumps = json::array();
  for (const auto& b : g.bumps) bumps.push_back(json{{"center", point_json(b.center)}, {"radius", b.radius}});
  dg["bumps"] = bumps;
  dg["kato_alpha"] = g.kato_alpha;
  dg["kato_levels"] = g.kato_levels;
  doc["diagnostics"] = dg;
  return doc.dump(2) + "\n";
}

}  // namespace semilin
