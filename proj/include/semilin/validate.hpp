#pragma once

// Sampled audits of the standing hypotheses plus the Lambda and contraction
// gates. Deterministic for a given audit seed.

#include "semilin/nonlinear.hpp"
#include "semilin/problem.hpp"

#include <optional>
#include <string>
#include <vector>

namespace semilin {

struct ValidationCheck {
  std::string name;
  bool pass = false;
  std::string detail;
  std::optional<Point> witness;
  std::optional<double> witness_u;
};

struct ValidationOptions {
  std::size_t audit_samples = 10000;
  std::uint64_t seed = 1;
  Exec exec{};
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  std::optional<LambdaSpace> lambda;
  std::optional<ContractionReport> contraction;
  std::size_t audit_samples = 0;
  std::uint64_t seed = 0;
  bool pass = false;
  /// First failing check, or empty.
  std::string first_failure() const;
};

/// Checks, in order: U > 0, 0 <= F(x, u) <= U(x) u on D x (0, b), phi >= 0 and
/// finite with sup phi < b, gamma0 > 0 (Lambda bounds), contraction condition.
/// Later gates are skipped (and fail) once an earlier gate they depend on fails.
ValidationReport validate(const Problem& problem, const ValidationOptions& options);

}  // namespace semilin
