#pragma once

// Counter-based random streams (Philox4x32-10). A stream is identified by a
// master seed plus a structured key; the key is packed bijectively into the
// Philox counter, so distinct keys never share blocks and a stream's output
// does not depend on which thread draws it or in what order.

#include "semilin/types.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace semilin {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

/// Ten-round Philox 4x32 block function.
Philox4x32Counter philox4x32(Philox4x32Counter ctr, Philox4x32Key key);

/// What a stream is used for; part of the key so that, e.g., boundary audits
/// never reuse the paths of an operator evaluation.
enum class Purpose : std::uint8_t {
  ExitTime = 1,
  Harmonic = 2,
  GreenPotential = 3,
  Schrodinger = 4,
  Operator = 5,
  Residual = 6,
  BoundarySample = 7,
  Audit = 8,
  Control = 9,
  Diagnostics = 10,
  Test = 11,
};

struct StreamKey {
  Purpose purpose = Purpose::Test;
  std::uint32_t point = 0;
  std::uint32_t iteration = 0;  // < 2^24
  std::uint32_t replicate = 0;
};

class RngStream {
 public:
  RngStream(std::uint64_t master_seed, StreamKey key);

  std::uint32_t next_u32();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller on 32-bit uniforms (tails truncated near 6.66 sigma).
  double normal();
  /// Fills `z` with independent standard normals.
  void fill_normal(Eigen::Ref<Eigen::VectorXd> z);
  /// Uniformly distributed unit vector in R^d.
  Point unit_vector(int d);

  std::uint64_t master_seed() const { return seed_; }
  const StreamKey& key() const { return key_; }

 private:
  void refill();

  std::uint64_t seed_;
  StreamKey key_;
  Philox4x32Key philox_key_;
  Philox4x32Counter ctr_;
  Philox4x32Counter block_{};
  int used_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

inline std::uint32_t RngStream::next_u32() {
  if (used_ == 4) refill();
  return block_[static_cast<std::size_t>(used_++)];
}

inline double RngStream::uniform() {
  const std::uint64_t a = next_u32() >> 5;
  const std::uint64_t b = next_u32() >> 6;
  return static_cast<double>((a << 26) | b) * 0x1.0p-53;
}

inline double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  // u1 in (0, 1] keeps the logarithm finite.
  const double u1 = (static_cast<double>(next_u32()) + 1.0) * 0x1.0p-32;
  const double u2 = static_cast<double>(next_u32()) * 0x1.0p-32;
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

inline void RngStream::fill_normal(Eigen::Ref<Eigen::VectorXd> z) {
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal();
}

/// A family of streams sharing seed, purpose, point and iteration; one stream
/// per replicate (path) index.
struct StreamFamily {
  std::uint64_t seed = 0;
  Purpose purpose = Purpose::Test;
  std::uint32_t point = 0;
  std::uint32_t iteration = 0;

  RngStream stream(std::uint32_t replicate) const {
    return RngStream(seed, StreamKey{purpose, point, iteration, replicate});
  }
  StreamFamily at_point(std::uint32_t p) const {
    StreamFamily f = *this;
    f.point = p;
    return f;
  }
  StreamFamily at_iteration(std::uint32_t it) const {
    StreamFamily f = *this;
    f.iteration = it;
    return f;
  }
};

}  // namespace semilin
