#include "semilin/rng.hpp"

#include "semilin/errors.hpp"

#include <cmath>
#include <numbers>

namespace semilin {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

Philox4x32Counter philox4x32(Philox4x32Counter ctr, Philox4x32Key key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

// Counter words: [block index, replicate, point, purpose<<24 | iteration].
RngStream::RngStream(std::uint64_t master_seed, StreamKey key)
    : seed_(master_seed),
      key_(key),
      philox_key_{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32)},
      ctr_{0u, key.replicate, key.point,
           (static_cast<std::uint32_t>(key.purpose) << 24) | (key.iteration & 0x00FFFFFFu)} {
  if (key.iteration > 0x00FFFFFFu) throw InputError("stream iteration index exceeds 2^24");
}

void RngStream::refill() {
  block_ = philox4x32(ctr_, philox_key_);
  if (++ctr_[0] == 0) throw NumericalError("random stream exhausted (2^32 blocks)");
  used_ = 0;
}

Point RngStream::unit_vector(int d) {
  Point v(d);
  double n2 = 0.0;
  do {
    fill_normal(v);
    n2 = v.squaredNorm();
  } while (n2 == 0.0);
  return v / std::sqrt(n2);
}

}  // namespace semilin
