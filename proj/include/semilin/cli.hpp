#pragma once

// Command-line driver. Every output file starts with a header holding the
// tool version, the SHA-256 of the problem file, the seed and the effective
// configuration; the thread count is not part of it because it never changes
// the numbers.
//
// Exit codes: 0 ok, 1 input error, 2 hypothesis failure, 3 non-convergence.

#include "semilin/field.hpp"
#include "semilin/problem.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace semilin {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitInput = 1, kExitHypothesis = 2, kExitNonConvergence = 3 };

struct RunConfig {
  std::string subcommand;  // validate | solve | linear | diagnose
  std::filesystem::path problem;
  std::filesystem::path out = "out";
  std::optional<std::uint64_t> seed;
  int threads = 0;         // 0: hardware concurrency
  std::optional<double> grid_h;
  std::optional<std::size_t> paths;
  std::optional<double> dt;
  std::optional<double> tol;
  std::optional<int> max_iter;
  bool force = false;
  std::optional<std::filesystem::path> field;  // diagnose: solved field CSV
};

/// Runs one subcommand; errors are reported on `log` and mapped to exit codes.
int run(const RunConfig& config, std::ostream& log);

int run_validate(const RunConfig& config, std::ostream& log);
int run_solve(const RunConfig& config, std::ostream& log);
int run_linear(const RunConfig& config, std::ostream& log);
int run_diagnose(const RunConfig& config, std::ostream& log);

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

/// Field CSV: '#' header lines, then x1..xd,value,stderr.
void write_field_csv(const std::filesystem::path& path, const Field& field, const std::string& header_json);
/// Reads the numeric rows of a field CSV (header lines skipped).
Field read_field_csv(const std::filesystem::path& path, int dimension);

}  // namespace semilin
