#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>

namespace semilin {

using Point = Eigen::VectorXd;
/// One point per column.
using PointSet = Eigen::MatrixXd;

/// Real-valued function of a point in R^d.
using ScalarField = std::function<double(const Point&)>;

/// Monte Carlo estimate: value, standard error of the mean, sample count.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;  // `stderr` is a macro in <cstdio>
  std::size_t n = 0;
};

/// Mean and standard error of `samples`, summed in index order so the result
/// does not depend on how the samples were produced.
inline Estimate estimate_from(std::span<const double> samples) {
  Estimate e;
  e.n = samples.size();
  if (e.n == 0) return e;
  double sum = 0.0;
  for (double s : samples) sum += s;
  e.value = sum / static_cast<double>(e.n);
  if (e.n >= 2) {
    double ss = 0.0;
    for (double s : samples) ss += (s - e.value) * (s - e.value);
    e.std_error = std::sqrt(ss / static_cast<double>(e.n - 1) / static_cast<double>(e.n));
  }
  return e;
}

}  // namespace semilin
