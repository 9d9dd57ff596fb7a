#include "semilin/parallel.hpp"
#include "semilin/rng.hpp"

#include "doctest.h"

#include <cmath>
#include <vector>

using namespace semilin;

TEST_CASE("philox known-answer vectors") {
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == Philox4x32Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        Philox4x32Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        Philox4x32Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("equal seed and key reproduce the sequence") {
  const StreamKey key{Purpose::Harmonic, 17, 3, 1234};
  RngStream a(42, key), b(42, key);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.next_u32() == b.next_u32());
    CHECK(a.uniform() == b.uniform());
    CHECK(a.normal() == b.normal());
  }
}

TEST_CASE("distinct key components give distinct streams") {
  auto first = [](std::uint64_t seed, StreamKey key) {
    RngStream s(seed, key);
    return std::vector<std::uint32_t>{s.next_u32(), s.next_u32(), s.next_u32(), s.next_u32()};
  };
  const StreamKey base{Purpose::Operator, 5, 2, 9};
  const auto ref = first(1, base);
  CHECK(first(2, base) != ref);
  CHECK(first(1, StreamKey{Purpose::Residual, 5, 2, 9}) != ref);
  CHECK(first(1, StreamKey{Purpose::Operator, 6, 2, 9}) != ref);
  CHECK(first(1, StreamKey{Purpose::Operator, 5, 3, 9}) != ref);
  CHECK(first(1, StreamKey{Purpose::Operator, 5, 2, 10}) != ref);
}

TEST_CASE("streams drawn in parallel match the serial draw") {
  const StreamFamily fam{7, Purpose::Test, 0, 0};
  const std::size_t n = 4096;
  std::vector<double> serial(n), threaded(n);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream s = fam.stream(static_cast<std::uint32_t>(i));
    serial[i] = s.normal() + s.uniform();
  }
  parallel_for(n, Exec{4}, [&](std::size_t i) {
    RngStream s = fam.stream(static_cast<std::uint32_t>(n - 1 - i));
    threaded[n - 1 - i] = s.normal() + s.uniform();
  }, 7);
  CHECK(serial == threaded);
}

TEST_CASE("uniform and normal moments") {
  RngStream s(2024, StreamKey{Purpose::Test, 0, 0, 0});
  const int n = 200000;
  double su = 0, su2 = 0, sn = 0, sn2 = 0, sn4 = 0;
  double umin = 1, umax = 0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    su += u;
    su2 += u * u;
    const double z = s.normal();
    sn += z;
    sn2 += z * z;
    sn4 += z * z * z * z;
  }
  CHECK(umin >= 0.0);
  CHECK(umax < 1.0);
  const double mu = su / n;
  CHECK(std::abs(mu - 0.5) <= 3.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(su2 / n - mu * mu - 1.0 / 12.0) <= 3.0 * std::sqrt(1.0 / 180.0 / n));
  CHECK(std::abs(sn / n) <= 3.0 / std::sqrt(double(n)));
  CHECK(std::abs(sn2 / n - 1.0) <= 3.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(sn4 / n - 3.0) <= 3.0 * std::sqrt(96.0 / n));
}

TEST_CASE("unit vectors are unit and centred") {
  RngStream s(3, StreamKey{Purpose::Test, 1, 0, 0});
  const int n = 50000;
  Point mean = Point::Zero(5);
  for (int i = 0; i < n; ++i) {
    const Point v = s.unit_vector(5);
    CHECK(std::abs(v.norm() - 1.0) < 1e-12);
    mean += v;
  }
  mean /= n;
  // Each coordinate has variance 1/d.
  CHECK(mean.cwiseAbs().maxCoeff() <= 4.0 * std::sqrt(1.0 / 5.0 / n));
}
