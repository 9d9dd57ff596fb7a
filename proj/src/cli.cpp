#include "semilin/cli.hpp"

#include "semilin/diagnostics.hpp"
#include "semilin/errors.hpp"
#include "semilin/linear.hpp"
#include "semilin/nonlinear.hpp"
#include "semilin/validate.hpp"

#include "json.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace semilin {

using json = nlohmann::ordered_json;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json point_json(const Point& p) {
  json a = json::array();
  for (Eigen::Index i = 0; i < p.size(); ++i) a.push_back(p[i]);
  return a;
}

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

// Loaded problem with CLI overrides applied, plus provenance for headers.
struct Session {
  Problem problem;
  std::string problem_hash;
  json header;
  Exec exec;
};

Session open_session(const RunConfig& cfg) {
  Session s;
  const std::string text = read_file(cfg.problem);
  s.problem_hash = sha256_hex(text);
  s.problem = parse_problem(text);
  SolverSettings& sv = s.problem.solver;
  if (cfg.seed) sv.seed = *cfg.seed;
  if (cfg.grid_h) sv.grid_h = *cfg.grid_h;
  if (cfg.paths) sv.paths = *cfg.paths;
  sv.paths_max = std::max(sv.paths_max, sv.paths);
  if (cfg.dt) sv.dt = *cfg.dt;
  if (cfg.tol) sv.tol = *cfg.tol;
  if (cfg.max_iter) sv.max_iter = *cfg.max_iter;
  // Round-trip through the canonical form so overrides get the same checks as file values.
  s.problem = parse_problem(save_problem(s.problem));
  s.exec = cfg.threads > 0 ? Exec{cfg.threads} : Exec::hardware();
  s.header = json{{"tool", "semilin"},
                  {"version", kToolVersion},
                  {"subcommand", cfg.subcommand},
                  {"problem_sha256", s.problem_hash},
                  {"seed", s.problem.solver.seed},
                  {"force", cfg.force},
                  {"config", json::parse(save_problem(s.problem))}};
  std::filesystem::create_directories(cfg.out);
  return s;
}

class JsonlWriter {
 public:
  JsonlWriter(const std::filesystem::path& path, const json& header) : out_(path, std::ios::binary) {
    if (!out_) throw InputError("cannot write " + path.string());
    write(json{{"header", header}});
  }
  void write(const json& record) { out_ << record.dump() << '\n'; }

 private:
  std::ofstream out_;
};

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

json lambda_json(const LambdaSpace& L) {
  return json{{"gamma0", L.gamma0}, {"phi_sup", L.phi_sup}, {"U_norm", L.U_norm}, {"c", L.c},
              {"beta", L.beta},     {"m", L.m},             {"m_tilde", L.m_tilde}, {"b", std::isinf(L.b) ? json("inf") : json(L.b)},
              {"boundary_samples", L.boundary_samples},      {"safety", L.safety},
              {"quadrature_warning", L.quadrature_warning}};
}

json contraction_json(const ContractionReport& r) {
  return json{{"C", r.C}, {"C_tilde", r.C_tilde}, {"condition_ok", r.condition_ok}, {"R", r.R}, {"d", r.d}};
}

struct Solved {
  Grid grid;
  LambdaSpace lambda;
  ContractionReport contraction;
  PicardResult result;
};

Solved solve_problem(const Session& s, bool force, std::ostream& log) {
  const Problem& p = s.problem;
  Solved out;
  out.grid = interior_lattice(p.domain, p.solver.grid_h);
  out.lambda = lambda_bounds(p, lambda_options(p, s.exec));
  const double C = lipschitz_constant(p, out.lambda, out.grid.points);
  out.contraction = contraction_report(p, out.lambda, C);
  const FixedPointMap map(p, out.lambda, out.contraction, force);
  if (map.outside_guarantee()) {
    log << "WARNING: contraction condition fails (C~ = " << out.contraction.C_tilde
        << "); results are outside the convergence guarantee\n";
  }
  out.result = picard_solve(map, Field::constant(out.grid, out.lambda.m_tilde), picard_options(p), s.exec);
  return out;
}

int report_error(std::ostream& log, const char* kind, const std::exception& e, int code) {
  log << "error (" << kind << "): " << e.what() << '\n';
  return code;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

void write_field_csv(const std::filesystem::path& path, const Field& field, const std::string& header_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "# " << header_json << '\n';
  for (int i = 0; i < field.dimension(); ++i) out << 'x' << (i + 1) << ',';
  out << "value,stderr\n";
  for (Eigen::Index j = 0; j < field.size(); ++j) {
    for (int i = 0; i < field.dimension(); ++i) out << num(field.points()(i, j)) << ',';
    out << num(field.values()[j]) << ',' << num(field.stderrs()[j]) << '\n';
  }
}

Field read_field_csv(const std::filesystem::path& path, int dimension) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open field file " + path.string());
  std::vector<double> pts, vals, errs;
  std::string line;
  int lineno = 0;
  bool seen_columns = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!seen_columns) {
      seen_columns = true;
      if (line.rfind("x1", 0) == 0) continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
        throw InputError(path.string() + ":" + std::to_string(lineno) + ": not a number: '" + cell + "'");
      }
      row.push_back(v);
    }
    if (static_cast<int>(row.size()) != dimension + 2) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(dimension + 2) +
                       " columns");
    }
    pts.insert(pts.end(), row.begin(), row.begin() + dimension);
    vals.push_back(row[static_cast<std::size_t>(dimension)]);
    errs.push_back(row[static_cast<std::size_t>(dimension) + 1]);
  }
  const auto n = static_cast<Eigen::Index>(vals.size());
  if (n == 0) throw InputError("field file " + path.string() + " has no rows");
  return Field(Eigen::Map<const PointSet>(pts.data(), dimension, n),
               Eigen::Map<const Eigen::VectorXd>(vals.data(), n), Eigen::Map<const Eigen::VectorXd>(errs.data(), n));
}

// ---------------------------------------------------------------------------

int run_validate(const RunConfig& cfg, std::ostream& log) {
  const Session s = open_session(cfg);
  ValidationOptions vo;
  vo.seed = s.problem.solver.seed;
  vo.exec = s.exec;
  const ValidationReport rep = validate(s.problem, vo);
  JsonlWriter out(cfg.out / "validation.jsonl", s.header);
  for (const auto& c : rep.checks) {
    json rec{{"check", c.name}, {"pass", c.pass}, {"detail", c.detail}};
    if (c.witness) rec["witness"] = point_json(*c.witness);
    if (c.witness_u) rec["witness_u"] = *c.witness_u;
    out.write(rec);
    log << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
  }
  json summary{{"pass", rep.pass}, {"audit_samples", rep.audit_samples}, {"audit_seed", rep.seed}};
  if (rep.lambda) summary["lambda"] = lambda_json(*rep.lambda);
  if (rep.contraction) summary["contraction"] = contraction_json(*rep.contraction);
  out.write(json{{"summary", summary}});
  return rep.pass ? kExitOk : kExitHypothesis;
}

int run_solve(const RunConfig& cfg, std::ostream& log) {
  const Session s = open_session(cfg);
  ValidationOptions vo;
  vo.seed = s.problem.solver.seed;
  vo.exec = s.exec;
  const ValidationReport rep = validate(s.problem, vo);
  if (!rep.pass) {
    const bool only_contraction = rep.lambda.has_value() && rep.contraction.has_value();
    if (!cfg.force || !only_contraction) {
      log << "validation failed at: " << rep.first_failure() << '\n';
      for (const auto& c : rep.checks) {
        if (!c.pass) log << "  " << c.name << ": " << c.detail << '\n';
      }
      return kExitHypothesis;
    }
    log << "WARNING: --force given; solving outside the contraction guarantee\n";
  }
  const auto t0 = std::chrono::steady_clock::now();
  const Solved solved = solve_problem(s, cfg.force, log);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const PicardResult& r = solved.result;

  write_field_csv(cfg.out / "field.csv", r.field, s.header.dump());
  {
    JsonlWriter trace(cfg.out / "trace.jsonl", s.header);
    for (const auto& rec : r.trace.records) {
      trace.write(json{{"iteration", rec.iteration},
                       {"sup_diff", rec.sup_diff},
                       {"max_stderr", rec.max_stderr},
                       {"clamp_violations", rec.clamp_violations},
                       {"paths", rec.paths}});
    }
  }
  json summary{{"header", s.header},
               {"lambda", lambda_json(solved.lambda)},
               {"contraction", contraction_json(solved.contraction)},
               {"outside_guarantee", !solved.contraction.condition_ok},
               {"grid_points", r.field.size()},
               {"iterations", r.trace.iterations},
               {"converged", r.trace.converged},
               {"threshold", r.threshold},
               {"residual", r.residual},
               {"residual_threshold", r.residual_threshold},
               {"residual_ok", r.residual_ok}};
  if (s.problem.analytic_reference) {
    double err = 0.0;
    for (Eigen::Index j = 0; j < r.field.size(); ++j) {
      const double want = (*s.problem.analytic_reference)(Point(r.field.points().col(j)));
      err = std::max(err, std::abs(r.field.values()[j] - want));
    }
    summary["reference_max_abs_error"] = err;
  }
  write_json(cfg.out / "summary.json", summary);
  // Kept apart from summary.json so that the numeric outputs are reproducible byte for byte.
  write_json(cfg.out / "timing.json", json{{"wall_seconds", wall}});
  log << "C~ = " << solved.contraction.C_tilde << ", iterations = " << r.trace.iterations
      << ", converged = " << (r.trace.converged ? "yes" : "no") << ", residual = " << r.residual << " (threshold "
      << r.residual_threshold << "), wall time = " << wall << " s\n";
  return r.trace.converged ? kExitOk : kExitNonConvergence;
}

int run_linear(const RunConfig& cfg, std::ostream& log) {
  const Session s = open_session(cfg);
  const Problem& p = s.problem;
  const Grid grid = interior_lattice(p.domain, p.solver.grid_h);
  const SamplerOptions opts = p.solver.sampler();
  const Field h = field_harmonic_extension(p.domain, p.phi_field(), grid, p.solver.paths, p.solver.method, opts,
                                           StreamFamily{p.solver.seed, Purpose::Harmonic, 0, 0}, s.exec);
  const Field g = field_green_potential(p.domain, p.U_field(), grid, p.solver.paths, opts,
                                        StreamFamily{p.solver.seed, Purpose::GreenPotential, 0, 0}, s.exec);
  write_field_csv(cfg.out / "harmonic.csv", h, s.header.dump());
  write_field_csv(cfg.out / "green_potential.csv", g, s.header.dump());
  log << "wrote harmonic extension of phi and Green potential of U on " << grid.points.cols() << " points\n";
  return kExitOk;
}

namespace {

// Matches a field read from CSV back onto the lattice grid of the problem.
Field attach_lattice(const Field& f, const Grid& grid) {
  if (f.size() != grid.points.cols()) {
    throw InputError("field has " + std::to_string(f.size()) + " points but the grid has " +
                     std::to_string(grid.points.cols()) + " (different grid_h?)");
  }
  const double tol = 1e-9 * std::max(1.0, grid.lattice.spacing);
  if ((f.points() - grid.points).cwiseAbs().maxCoeff() > tol) {
    throw InputError("field points do not match the problem's interior grid");
  }
  return Field(grid, f.values(), f.stderrs());
}

std::vector<BumpFunction> default_bumps(const Domain& domain, const Grid& grid) {
  Eigen::Index best = 0;
  double depth = -1.0;
  for (Eigen::Index j = 0; j < grid.points.cols(); ++j) {
    const double v = -signed_distance(domain, grid.points.col(j));
    if (v > depth) {
      depth = v;
      best = j;
    }
  }
  const double rho = depth - 0.5 * grid.lattice.spacing;
  if (!(rho > 0.0)) throw InputError("grid too coarse for default weak-residual test functions");
  const Point c = grid.points.col(best);
  return {BumpFunction{c, rho}, BumpFunction{c, 0.75 * rho}, BumpFunction{c, 0.5 * rho}};
}

}  // namespace

int run_diagnose(const RunConfig& cfg, std::ostream& log) {
  const Session s = open_session(cfg);
  const Problem& p = s.problem;
  const DiagnosticsSettings& dg = p.diagnostics;
  const Domain& domain = p.domain;
  const Grid grid = interior_lattice(domain, p.solver.grid_h);

  Field u;
  if (cfg.field) {
    if (!std::filesystem::exists(*cfg.field)) throw InputError("field file not found: " + cfg.field->string());
    u = attach_lattice(read_field_csv(*cfg.field, p.dimension), grid);
  } else {
    log << "no --field given; solving first\n";
    u = solve_problem(s, cfg.force, log).result.field;
  }

  // Controlled convergence.
  SamplerOptions wos = p.solver.sampler();
  wos.shell = dg.shell;
  PointSet targets;
  if (!dg.sequences.targets.empty()) {
    targets.resize(p.dimension, static_cast<Eigen::Index>(dg.sequences.targets.size()));
    for (std::size_t i = 0; i < dg.sequences.targets.size(); ++i) {
      targets.col(static_cast<Eigen::Index>(i)) = dg.sequences.targets[i];
    }
  } else {
    const PointSet random = sample_boundary(domain, static_cast<std::size_t>(dg.sequences.count),
                                            StreamFamily{p.solver.seed, Purpose::Diagnostics, 1, 0});
    const PointSet on_s = dg.discontinuity_set.sample(domain, dg.sequences.count);
    targets.resize(p.dimension, random.cols() + on_s.cols());
    targets << random, on_s;
  }
  const auto sequences = approach_sequences(domain, targets, dg.sequences.approach);
  const PointEstimator h = harmonic_estimator(domain, p.phi_field(), dg.paths, wos,
                                              StreamFamily{p.solver.seed, Purpose::Diagnostics, 0, 0});
  const ScalarField g = control_boundary_function(domain, dg.discontinuity_set, dg.control_exponent, dg.control_cap);
  const PointEstimator k = dg.discontinuity_set.empty()
                               ? constant_estimator(0.0)
                               : harmonic_estimator(domain, g, dg.paths, wos,
                                                    StreamFamily{p.solver.seed, Purpose::Control, 0, 0});
  ConvergenceCheckOptions co;
  co.tail = dg.sequences.tail;
  co.tolerance = dg.tolerance;
  co.k_threshold = dg.k_threshold;
  const auto reports = controlled_convergence_check(domain, h, k, p.phi_field(), sequences, co, s.exec);
  std::size_t passed = 0;
  {
    JsonlWriter out(cfg.out / "controlled_convergence.jsonl", s.header);
    for (const auto& r : reports) {
      passed += r.pass ? 1 : 0;
      out.write(json{{"point", point_json(r.boundary_point)},
                     {"classification", classification_name(r.classification)},
                     {"tail_error", std::isfinite(r.tail_error) ? json(r.tail_error) : json(nullptr)},
                     {"pass", r.pass},
                     {"phi", r.phi_value},
                     {"h", vector_json(r.h_values)},
                     {"k", vector_json(r.k_values)}});
    }
  }
  log << "controlled convergence: " << passed << "/" << reports.size() << " sequences pass\n";

  // Weak residuals of the solved field.
  const std::vector<BumpFunction> bumps = dg.bumps.empty() ? default_bumps(domain, grid) : dg.bumps;
  const Reaction reaction = problem_reaction(p);
  std::size_t within = 0;
  {
    JsonlWriter out(cfg.out / "weak_residuals.jsonl", s.header);
    for (const auto& b : bumps) {
      const WeakResidual w = weak_residual(domain, u, reaction, b);
      within += w.within_budget ? 1 : 0;
      out.write(json{{"center", point_json(b.center)},
                     {"radius", b.radius},
                     {"residual", w.residual},
                     {"quadrature_error", w.quadrature_error},
                     {"mc_sigma", w.mc_sigma},
                     {"budget", w.budget},
                     {"within_budget", w.within_budget}});
    }
  }
  log << "weak residuals: " << within << "/" << bumps.size() << " within budget\n";

  // Green-tight norm and Kato profile of U.
  {
    JsonlWriter out(cfg.out / "green_tight.jsonl", s.header);
    PointSet xs;
    try {
      xs = interior_grid(domain, 0.25 * domain.enclosing_radius());
    } catch (const ConfigError&) {
      xs = grid.points;
    }
    const GreenTightNorm norm = green_tight_norm(domain, p.U_field(), p.solver.quadrature_h, xs, s.exec);
    out.write(json{{"green_tight_norm", norm.value},
                   {"argmax", point_json(norm.argmax)},
                   {"quadrature_h", p.solver.quadrature_h},
                   {"singular_fraction", norm.singular_fraction},
                   {"accuracy_warning", norm.accuracy_warning}});
    const auto profile = kato_profile(domain, p.U_field(), dg.kato_alpha, dg.kato_levels, xs);
    double alpha = dg.kato_alpha;
    for (double v : profile) {
      out.write(json{{"kato_alpha", alpha}, {"kato_modulus", v}});
      alpha *= 0.5;
    }
  }
  return kExitOk;
}

int run(const RunConfig& cfg, std::ostream& log) {
  try {
    if (cfg.subcommand == "validate") return run_validate(cfg, log);
    if (cfg.subcommand == "solve") return run_solve(cfg, log);
    if (cfg.subcommand == "linear") return run_linear(cfg, log);
    if (cfg.subcommand == "diagnose") return run_diagnose(cfg, log);
    log << "unknown subcommand " << cfg.subcommand << '\n';
    return kExitInput;
  } catch (const HypothesisError& e) {
    return report_error(log, "hypothesis", e, kExitHypothesis);
  } catch (const InputError& e) {
    return report_error(log, "input", e, kExitInput);
  } catch (const ConfigError& e) {
    return report_error(log, "config", e, kExitInput);
  } catch (const std::filesystem::filesystem_error& e) {
    return report_error(log, "io", e, kExitInput);
  } catch (const Error& e) {
    return report_error(log, "numerical", e, kExitInput);
  }
}

}  // namespace semilin
