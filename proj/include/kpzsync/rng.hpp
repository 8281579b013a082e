#ifndef KPZSYNC_RNG_HPP
#define KPZSYNC_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>

// Counter-based random numbers (Philox4x32-10). Every variate is a pure
// function of (stream key, lattice index), so shifting a noise field in time
// is literally a re-indexing: the same (key, index) always reproduces the
// same value, which is what makes bitwise cocycle tests possible.

namespace kpzsync {

namespace detail {

inline void philox_mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
  uint64_t p = static_cast<uint64_t>(a) * b;
  hi = static_cast<uint32_t>(p >> 32);
  lo = static_cast<uint32_t>(p);
}

}  // namespace detail

/// One Philox4x32-10 block: 128-bit counter, 64-bit key, 128 output bits.
inline std::array<uint32_t, 4> philox4x32(uint64_t key, uint64_t ctr_hi, uint64_t ctr_lo) {
  uint32_t c0 = static_cast<uint32_t>(ctr_lo);
  uint32_t c1 = static_cast<uint32_t>(ctr_lo >> 32);
  uint32_t c2 = static_cast<uint32_t>(ctr_hi);
  uint32_t c3 = static_cast<uint32_t>(ctr_hi >> 32);
  uint32_t k0 = static_cast<uint32_t>(key);
  uint32_t k1 = static_cast<uint32_t>(key >> 32);
  constexpr uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    uint32_t hi0, lo0, hi1, lo1;
    detail::philox_mulhilo(M0, c0, hi0, lo0);
    detail::philox_mulhilo(M1, c2, hi1, lo1);
    uint32_t n0 = hi1 ^ c1 ^ k0;
    uint32_t n1 = lo1;
    uint32_t n2 = hi0 ^ c3 ^ k1;
    uint32_t n3 = lo0;
    c0 = n0; c1 = n1; c2 = n2; c3 = n3;
    k0 += W0; k1 += W1;
  }
  return {c0, c1, c2, c3};
}

/// splitmix64 finalizer; used to derive independent stream keys from a seed.
inline uint64_t mix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline uint64_t derive_key(uint64_t seed, uint64_t salt) { return mix64(seed ^ mix64(salt)); }

namespace detail {

// 53-bit uniform in (0,1), strictly away from both endpoints (safe for log).
inline double to_unit_open(uint32_t hi, uint32_t lo) {
  uint64_t u = (static_cast<uint64_t>(hi) << 32) | lo;
  return (static_cast<double>(u >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace detail

/// Standard normal attached to the lattice point (idx_a, idx_b) of a stream.
/// Signed indices welcome (pullback windows reach into negative time).
inline double gaussian_at(uint64_t key, int64_t idx_a, int64_t idx_b) {
  auto w = philox4x32(key, static_cast<uint64_t>(idx_a), static_cast<uint64_t>(idx_b));
  double u1 = detail::to_unit_open(w[0], w[1]);
  double u2 = detail::to_unit_open(w[2], w[3]);
  constexpr double two_pi = 6.283185307179586476925286766559;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

/// Uniform in (0,1) at a lattice point (used for parameter scrambling in tests).
inline double uniform_at(uint64_t key, int64_t idx_a, int64_t idx_b) {
  auto w = philox4x32(key, static_cast<uint64_t>(idx_a), static_cast<uint64_t>(idx_b));
  return detail::to_unit_open(w[0], w[1]);
}

}  // namespace kpzsync

#endif
