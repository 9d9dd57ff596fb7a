#include "semilin/diagnostics.hpp"

#include "semilin/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace semilin {

namespace {

double sphere_area(int d) {
  const double half = 0.5 * d;
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

// int_{|z| < rho} |z|^{2-d} dz = |S^{d-1}| int_0^rho r dr.
double small_ball_integral(int d, double rho) { return sphere_area(d) * rho * rho / 2.0; }

inline double kernel(int d, double r2) {
  if (d == 3) return 1.0 / std::sqrt(r2);
  return std::pow(r2, 0.5 * (2 - d));
}

}  // namespace

// ---------------------------------------------------------------------------

GreenTightNorm green_tight_norm(const Domain& domain, const ScalarField& w, double h, const PointSet& x_samples,
                                Exec exec) {
  if (!(h > 0.0)) throw ConfigError("quadrature spacing must be positive");
  if (x_samples.cols() == 0) throw InputError("green_tight_norm needs at least one x-sample");
  const int d = domain.dimension();
  // Cells of side h centred at bbox_centre + k h, |k_i| <= K_i, covering the bbox.
  const Point centre = 0.5 * (domain.bbox_lo() + domain.bbox_hi());
  std::vector<int> counts(static_cast<std::size_t>(d));
  std::vector<int> half(static_cast<std::size_t>(d));
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) {
    const double extent = 0.5 * (domain.bbox_hi()[i] - domain.bbox_lo()[i]);
    half[static_cast<std::size_t>(i)] = static_cast<int>(std::ceil(extent / h - 0.5 - 1e-12));
    counts[static_cast<std::size_t>(i)] = 2 * half[static_cast<std::size_t>(i)] + 1;
    total *= static_cast<std::size_t>(counts[static_cast<std::size_t>(i)]);
  }
  std::vector<double> centres;
  std::vector<double> weights;
  std::vector<int> cell_to_entry(total, -1);
  Point c(d);
  const double cell_volume = std::pow(h, d);
  for (std::size_t linear = 0; linear < total; ++linear) {
    std::size_t rem = linear;
    for (int i = d - 1; i >= 0; --i) {
      const auto n = static_cast<std::size_t>(counts[static_cast<std::size_t>(i)]);
      c[i] = centre[i] + (static_cast<int>(rem % n) - half[static_cast<std::size_t>(i)]) * h;
      rem /= n;
    }
    if (signed_distance(domain, c) < 0.0) {
      cell_to_entry[linear] = static_cast<int>(weights.size());
      centres.insert(centres.end(), c.data(), c.data() + d);
      weights.push_back(std::abs(w(c)) * cell_volume);
    }
  }
  const double ball = small_ball_integral(d, 0.5 * h);
  const auto n_cells = static_cast<Eigen::Index>(weights.size());
  const Eigen::Map<const PointSet> cell_centres(centres.data(), d, n_cells);

  const auto nx = static_cast<std::size_t>(x_samples.cols());
  std::vector<double> totals(nx, 0.0);
  std::vector<double> fractions(nx, 0.0);
  parallel_for(
      nx, exec,
      [&](std::size_t s) {
        const Point x = x_samples.col(static_cast<Eigen::Index>(s));
        int own = -1;
        std::size_t linear = 0;
        bool inside_box = true;
        for (int i = 0; i < d; ++i) {
          const long k = std::lround((x[i] - centre[i]) / h) + half[static_cast<std::size_t>(i)];
          if (k < 0 || k >= counts[static_cast<std::size_t>(i)]) inside_box = false;
          linear = linear * static_cast<std::size_t>(counts[static_cast<std::size_t>(i)]) +
                   static_cast<std::size_t>(std::max(0L, k));
        }
        if (inside_box) own = cell_to_entry[linear];
        double sum = 0.0;
        for (Eigen::Index j = 0; j < n_cells; ++j) {
          if (j == own) continue;
          const double r2 = (cell_centres.col(j) - x).squaredNorm();
          sum += weights[static_cast<std::size_t>(j)] * kernel(d, r2);
        }
        double singular = 0.0;
        if (own >= 0) {
          const double sup_w = std::max(weights[static_cast<std::size_t>(own)] / cell_volume, std::abs(w(x)));
          singular = sup_w * ball;
        }
        totals[s] = sum + singular;
        fractions[s] = totals[s] > 0.0 ? singular / totals[s] : 0.0;
      },
      1);

  GreenTightNorm out;
  out.value = -1.0;
  for (std::size_t s = 0; s < nx; ++s) {
    if (totals[s] > out.value) {
      out.value = totals[s];
      out.argmax = x_samples.col(static_cast<Eigen::Index>(s));
    }
    out.singular_fraction = std::max(out.singular_fraction, fractions[s]);
  }
  out.accuracy_warning = out.singular_fraction > 0.1;
  return out;
}

double kato_modulus(const Domain& domain, const ScalarField& w, double alpha, const PointSet& x_samples,
                    int cells_per_radius) {
  if (!(alpha > 0.0)) throw InputError("Kato radius must be positive");
  if (cells_per_radius < 1) throw InputError("cells_per_radius must be >= 1");
  if (x_samples.cols() == 0) throw InputError("kato_modulus needs at least one x-sample");
  const int d = domain.dimension();
  const double h = alpha / cells_per_radius;
  const double cell_volume = std::pow(h, d);
  const int n = cells_per_radius;
  const int per_axis = 2 * n + 1;
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(per_axis);
  const double ball = small_ball_integral(d, 0.5 * h);

  double best = 0.0;
  Point c(d);
  for (Eigen::Index s = 0; s < x_samples.cols(); ++s) {
    const Point x = x_samples.col(s);
    // w vanishes outside D.
    auto w_ext = [&](const Point& y) { return signed_distance(domain, y) < 0.0 ? std::abs(w(y)) : 0.0; };
    double sum = 0.0;
    for (std::size_t linear = 0; linear < total; ++linear) {
      std::size_t rem = linear;
      bool centre_cell = true;
      for (int i = d - 1; i >= 0; --i) {
        const int k = static_cast<int>(rem % static_cast<std::size_t>(per_axis)) - n;
        rem /= static_cast<std::size_t>(per_axis);
        c[i] = x[i] + k * h;
        if (k != 0) centre_cell = false;
      }
      if (centre_cell) continue;
      const double r2 = (c - x).squaredNorm();
      if (r2 > alpha * alpha) continue;
      const double wv = w_ext(c);
      if (wv != 0.0) sum += wv * cell_volume * kernel(d, r2);
    }
    sum += w_ext(x) * ball;
    best = std::max(best, sum);
  }
  return best;
}

std::vector<double> kato_profile(const Domain& domain, const ScalarField& w, double alpha0, int levels,
                                 const PointSet& x_samples, int cells_per_radius) {
  std::vector<double> out;
  double alpha = alpha0;
  for (int l = 0; l < levels; ++l, alpha *= 0.5) {
    out.push_back(kato_modulus(domain, w, alpha, x_samples, cells_per_radius));
  }
  return out;
}

// ---------------------------------------------------------------------------

const char* classification_name(Classification c) {
  switch (c) {
    case Classification::Star: return "star";
    case Classification::StarStar: return "star_star";
    case Classification::Inconclusive: return "inconclusive";
  }
  return "?";
}

std::vector<ApproachSequence> approach_sequences(const Domain& domain, const PointSet& targets,
                                                 const ApproachSettings& settings) {
  if (settings.terms < 2) throw InputError("approach sequences need at least two terms");
  if (!(settings.decay > 0.0 && settings.decay < 1.0)) throw InputError("approach decay must lie in (0, 1)");
  const int d = domain.dimension();
  const double R = domain.enclosing_radius();
  std::vector<ApproachSequence> out;
  for (Eigen::Index t = 0; t < targets.cols(); ++t) {
    const Point y0 = targets.col(t);
    require_dimension(domain, y0);
    const Point y = project_to_boundary(domain, y0);
    const Point normal = outward_normal(domain, y);
    // Tangent: the coordinate axis least aligned with the normal, orthogonalised.
    Eigen::Index axis = 0;
    normal.cwiseAbs().minCoeff(&axis);
    Point tangent = Point::Unit(d, axis) - normal[axis] * normal;
    tangent.normalize();
    const Point dir = -std::cos(settings.angle) * normal + std::sin(settings.angle) * tangent;
    ApproachSequence seq;
    seq.target = y;
    seq.points.resize(d, settings.terms);
    double delta = settings.start_distance * R;
    for (int j = 0; j < settings.terms; ++j, delta *= settings.decay) {
      const Point x = y + delta * dir;
      if (!(signed_distance(domain, x) < 0.0)) {
        throw InputError("approach sequence term " + std::to_string(j) + " towards target " + std::to_string(t) +
                         " is not interior");
      }
      seq.points.col(j) = x;
    }
    out.push_back(std::move(seq));
  }
  return out;
}

namespace {

void check_sequence(const Domain& domain, const ApproachSequence& seq) {
  const double R = domain.enclosing_radius();
  double prev = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < seq.points.cols(); ++j) {
    const Point x = seq.points.col(j);
    if (!(signed_distance(domain, x) < 0.0)) throw InputError("sequence point is not interior");
    const double dist = (x - seq.target).norm();
    if (!(dist < prev)) throw InputError("sequence distances to the boundary point are not strictly decreasing");
    prev = dist;
  }
  if (!(prev < 1e-3 * R)) throw InputError("sequence does not approach its boundary point (final distance >= 1e-3 R)");
}

}  // namespace

std::vector<ControlledConvergenceReport> controlled_convergence_check(const Domain& domain, const PointEstimator& h,
                                                                      const PointEstimator& k,
                                                                      const ScalarField& phi,
                                                                      const std::vector<ApproachSequence>& sequences,
                                                                      const ConvergenceCheckOptions& options,
                                                                      Exec exec) {
  if (options.tail < 1) throw InputError("tail length must be >= 1");
  for (const auto& seq : sequences) {
    check_sequence(domain, seq);
    if (seq.points.cols() < options.tail) throw InputError("sequence shorter than the tail");
  }
  // Flatten (sequence, term) pairs so evaluation parallelises across everything.
  std::vector<std::pair<std::size_t, Eigen::Index>> jobs;
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    for (Eigen::Index j = 0; j < sequences[s].points.cols(); ++j) jobs.emplace_back(s, j);
  }
  std::vector<double> hv(jobs.size()), kv(jobs.size());
  parallel_for(
      jobs.size(), exec,
      [&](std::size_t i) {
        const Point x = sequences[jobs[i].first].points.col(jobs[i].second);
        hv[i] = h(x, static_cast<std::uint32_t>(i)).value;
        kv[i] = k(x, static_cast<std::uint32_t>(i)).value;
      },
      1);

  std::vector<ControlledConvergenceReport> reports;
  std::size_t cursor = 0;
  for (const auto& seq : sequences) {
    ControlledConvergenceReport rep;
    rep.boundary_point = seq.target;
    rep.sequence = seq.points;
    const Eigen::Index n = seq.points.cols();
    rep.h_values.resize(n);
    rep.k_values.resize(n);
    for (Eigen::Index j = 0; j < n; ++j, ++cursor) {
      rep.h_values[j] = hv[cursor];
      rep.k_values[j] = kv[cursor];
    }
    rep.phi_value = phi(seq.target);
    const auto tail = rep.k_values.tail(options.tail);
    const auto h_tail = rep.h_values.tail(options.tail);
    if (tail.maxCoeff() < options.k_threshold) {
      rep.classification = Classification::Star;
      rep.tail_error = std::isfinite(rep.phi_value) ? (h_tail.array() - rep.phi_value).abs().maxCoeff()
                                                    : std::numeric_limits<double>::infinity();
      rep.pass = rep.tail_error <= options.tolerance;
    } else if (tail.minCoeff() >= options.k_threshold) {
      rep.classification = Classification::StarStar;
      rep.tail_error = (h_tail.array() / (1.0 + tail.array())).abs().maxCoeff();
      rep.pass = rep.tail_error <= options.tolerance;
    } else {
      rep.classification = Classification::Inconclusive;
      rep.tail_error = std::numeric_limits<double>::quiet_NaN();
      rep.pass = false;
    }
    reports.push_back(std::move(rep));
  }
  return reports;
}

PointEstimator harmonic_estimator(const Domain& domain, ScalarField f, std::size_t n, SamplerOptions opts,
                                  StreamFamily rng) {
  return [&domain, f = std::move(f), n, opts, rng](const Point& x, std::uint32_t index) {
    return harmonic_extension(domain, f, x, n, ExitMethod::WalkOnSpheres, opts, rng.at_point(index));
  };
}

PointEstimator constant_estimator(double value) {
  return [value](const Point&, std::uint32_t) { return Estimate{value, 0.0, 0}; };
}

// ---------------------------------------------------------------------------

namespace {

double segment_distance(const Point& y, const Point& a, const Point& b) {
  const Point ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((y - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (y - (a + t * ab)).norm();
}

// Distance from y to {z : |z - centre| = radius, n . z = offset}.
double sphere_section_distance(const Point& y, const Point& centre, double radius, const Point& n, double offset) {
  const double h = offset - n.dot(centre);
  if (std::abs(h) > radius) return std::numeric_limits<double>::infinity();
  const double rho = std::sqrt(radius * radius - h * h);
  const Point c0 = centre + h * n;
  const Point w = y - c0;
  const double a = n.dot(w);
  const double p = (w - a * n).norm();
  return std::sqrt(a * a + (p - rho) * (p - rho));
}

}  // namespace

double DiscontinuitySet::distance(const Domain& domain, const Point& y) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& piece : pieces_) {
    switch (piece.kind) {
      case DiscontinuityPiece::Kind::Point:
        best = std::min(best, (y - piece.vertices.col(0)).norm());
        break;
      case DiscontinuityPiece::Kind::Polyline: {
        const Eigen::Index nv = piece.vertices.cols();
        if (nv == 1) best = std::min(best, (y - piece.vertices.col(0)).norm());
        for (Eigen::Index i = 0; i + 1 < nv; ++i) {
          best = std::min(best, segment_distance(y, piece.vertices.col(i), piece.vertices.col(i + 1)));
        }
        if (piece.closed && nv > 2) {
          best = std::min(best, segment_distance(y, piece.vertices.col(nv - 1), piece.vertices.col(0)));
        }
        break;
      }
      case DiscontinuityPiece::Kind::Plane: {
        const Point n = piece.normal.normalized();
        const double off = piece.offset / piece.normal.norm();
        if (const auto* b = std::get_if<BallShape>(&domain.shape())) {
          best = std::min(best, sphere_section_distance(y, b->center, b->radius, n, off));
        } else if (const auto* a = std::get_if<AnnulusShape>(&domain.shape())) {
          best = std::min(best, sphere_section_distance(y, a->center, a->r_out, n, off));
          best = std::min(best, sphere_section_distance(y, a->center, a->r_in, n, off));
        } else {
          best = std::min(best, std::abs(n.dot(y) - off));
        }
        break;
      }
    }
  }
  return best;
}

PointSet DiscontinuitySet::sample(const Domain& domain, int per_piece) const {
  const int d = domain.dimension();
  std::vector<Point> pts;
  for (const auto& piece : pieces_) {
    switch (piece.kind) {
      case DiscontinuityPiece::Kind::Point: pts.push_back(piece.vertices.col(0)); break;
      case DiscontinuityPiece::Kind::Polyline:
        for (Eigen::Index i = 0; i < piece.vertices.cols(); ++i) pts.push_back(piece.vertices.col(i));
        break;
      case DiscontinuityPiece::Kind::Plane: {
        const Point n = piece.normal.normalized();
        const double off = piece.offset / piece.normal.norm();
        Eigen::Index axis = 0;
        n.cwiseAbs().minCoeff(&axis);
        Point t1 = Point::Unit(d, axis) - n[axis] * n;
        t1.normalize();
        Point t2 = Point::Zero(d);
        // Second in-plane direction from the next least aligned axis.
        for (int i = 0; i < d; ++i) {
          if (i == axis) continue;
          Point e = Point::Unit(d, i) - n[i] * n;
          e -= e.dot(t1) * t1;
          if (e.norm() > 1e-8) {
            t2 = e.normalized();
            break;
          }
        }
        Point centre = Point::Zero(d);
        double radius = domain.enclosing_radius();
        if (const auto* b = std::get_if<BallShape>(&domain.shape())) {
          centre = b->center;
          radius = b->radius;
        }
        const double h = off - n.dot(centre);
        if (std::abs(h) >= radius) break;
        const double rho = std::sqrt(radius * radius - h * h);
        for (int k = 0; k < per_piece; ++k) {
          const double th = 2.0 * std::numbers::pi * k / per_piece;
          Point guess = centre + h * n + rho * (std::cos(th) * t1 + std::sin(th) * t2);
          pts.push_back(project_to_boundary(domain, guess));
        }
        break;
      }
    }
  }
  PointSet out(d, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = pts[i];
  return out;
}

ScalarField control_boundary_function(const Domain& domain, const DiscontinuitySet& S, double exponent, double cap) {
  const int d = domain.dimension();
  if (!(exponent > 0.0 && exponent <= d - 2)) {
    throw InputError("control exponent must lie in (0, d - 2]");
  }
  if (!(cap > 0.0) || !std::isfinite(cap)) throw InputError("control cap must be positive and finite");
  if (S.empty()) return [](const Point&) { return 0.0; };
  return [domain, S, exponent, cap](const Point& y) {
    const double dist = S.distance(domain, y);
    if (dist <= 0.0) return cap;
    return std::min(std::pow(dist, -exponent), cap);
  };
}

ControlFunction control_function_heuristic(const Domain& domain, const DiscontinuitySet& S, bool phi_discontinuous,
                                           double exponent, double cap, const PointSet& points, std::size_t n,
                                           const SamplerOptions& opts, const StreamFamily& rng, Exec exec) {
  ControlFunction out;
  out.g = control_boundary_function(domain, S, exponent, cap);
  if (S.empty() && phi_discontinuous) {
    out.warnings.push_back("boundary data declared discontinuous but the discontinuity set is empty; k = 0");
  }
  if (S.empty()) {
    out.k = Field(points, Eigen::VectorXd::Zero(points.cols()), Eigen::VectorXd::Zero(points.cols()));
    return out;
  }
  out.k = field_harmonic_extension(domain, out.g, points, n, ExitMethod::WalkOnSpheres, opts, rng, exec);
  return out;
}

// ---------------------------------------------------------------------------

double BumpFunction::value(const Point& x) const {
  const double s = (x - center).squaredNorm() / (radius * radius);
  if (s >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - s));
}

double BumpFunction::laplacian(const Point& x) const {
  // psi = f(s), s = |x - c|^2 / rho^2, f(s) = exp(-t), t = 1 / (1 - s):
  // Lap psi = f / rho^2 * (4 s (t^4 - 2 t^3) - 2 d t^2).
  const double s = (x - center).squaredNorm() / (radius * radius);
  if (s >= 1.0) return 0.0;
  const double t = 1.0 / (1.0 - s);
  const double f = std::exp(-t);
  const double t2 = t * t;
  const auto d = static_cast<double>(x.size());
  return f / (radius * radius) * (4.0 * s * (t2 * t2 - 2.0 * t2 * t) - 2.0 * d * t2);
}

Reaction source_reaction(ScalarField q) {
  return [q = std::move(q)](const Point& x, double) { return -q(x); };
}

WeakResidual weak_residual(const Domain& domain, const Field& u, const Reaction& reaction, const BumpFunction& psi) {
  if (!u.lattice()) throw InputError("weak_residual requires a field on a lattice grid");
  require_dimension(domain, psi.center);
  const Lattice& lat = *u.lattice();
  const double h = lat.spacing;
  const int d = domain.dimension();
  if (!(psi.radius > 0.0)) throw InputError("test function radius must be positive");
  if (-signed_distance(domain, psi.center) - psi.radius < 0.5 * h * (1.0 - 1e-9)) {
    throw InputError("test function support touches the boundary (or leaves the grid region)");
  }
  const double vol = std::pow(h, d);
  const double vol2 = std::pow(2.0 * h, d);
  // Coarse sums over the 2^d sublattices of spacing 2h; their mean is the fine sum.
  std::vector<double> coarse(std::size_t{1} << d, 0.0);
  double fine = 0.0, var = 0.0;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    const Point x = u.points().col(j);
    const double pv = psi.value(x);
    const double lap = psi.laplacian(x);
    if (pv == 0.0 && lap == 0.0) continue;
    const double uj = u.values()[j];
    const double r = reaction(x, uj);
    const double integrand = 0.5 * uj * lap - r * pv;
    fine += vol * integrand;
    std::size_t parity = 0;
    for (int i = 0; i < d; ++i) {
      const long k = std::lround((x[i] - lat.origin[i]) / h);
      parity = (parity << 1) | static_cast<std::size_t>(k & 1);
    }
    coarse[parity] += vol2 * integrand;
    const double se = u.stderrs()[j];
    if (se > 0.0) {
      const double du = 1e-6 * std::max(1.0, std::abs(uj));
      const double dr = (reaction(x, uj + du) - reaction(x, uj - du)) / (2.0 * du);
      const double sens = vol * (0.5 * lap - dr * pv);
      var += sens * sens * se * se;
    }
  }
  WeakResidual out;
  out.residual = fine;
  for (double c : coarse) out.quadrature_error = std::max(out.quadrature_error, std::abs(fine - c));
  out.mc_sigma = std::sqrt(var);
  out.budget = out.quadrature_error + 3.0 * out.mc_sigma;
  out.within_budget = std::abs(out.residual) <= out.budget;
  return out;
}

}  // namespace semilin
