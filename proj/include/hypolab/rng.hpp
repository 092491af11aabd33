#ifndef HYPOLAB_RNG_HPP
#define HYPOLAB_RNG_HPP

// Counter-based random numbers (Philox4x32-10).  Every variate is a pure
// function of (seed, stream, index), so draws are reproducible bit-for-bit
// regardless of evaluation order or thread count.

#include <array>
#include <cmath>
#include <cstdint>

namespace hypolab {

namespace philox {

constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
constexpr std::uint32_t kMult0 = 0xD2511F53u;
constexpr std::uint32_t kMult1 = 0xCD9E8D57u;

inline std::uint32_t mulhi(std::uint32_t a, std::uint32_t b) {
  return static_cast<std::uint32_t>((static_cast<std::uint64_t>(a) * b) >> 32);
}

inline std::array<std::uint32_t, 4> block(std::uint64_t key, const std::array<std::uint32_t, 4>& counter) {
  std::uint32_t k0 = static_cast<std::uint32_t>(key);
  std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
  std::uint32_t c0 = counter[0], c1 = counter[1], c2 = counter[2], c3 = counter[3];
  for (int round = 0; round < 10; ++round) {
    const std::uint32_t hi0 = mulhi(kMult0, c0), lo0 = kMult0 * c0;
    const std::uint32_t hi1 = mulhi(kMult1, c2), lo1 = kMult1 * c2;
    const std::uint32_t n0 = hi1 ^ c1 ^ k0;
    const std::uint32_t n1 = lo1;
    const std::uint32_t n2 = hi0 ^ c3 ^ k1;
    const std::uint32_t n3 = lo0;
    c0 = n0;
    c1 = n1;
    c2 = n2;
    c3 = n3;
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return {c0, c1, c2, c3};
}

}  // namespace philox

// One block of four 32-bit words addressed by (seed; word0, word1, stream).
inline std::array<std::uint32_t, 4> rng_block(std::uint64_t seed, std::uint64_t stream,
                                              std::uint32_t w0, std::uint32_t w1) {
  return philox::block(seed, {w0, w1, static_cast<std::uint32_t>(stream),
                              static_cast<std::uint32_t>(stream >> 32)});
}

// Standard normal via Box-Muller (cosine branch) on one Philox block.
inline double normal_draw(std::uint64_t seed, std::uint64_t stream, std::uint32_t w0,
                          std::uint32_t w1) {
  const auto x = rng_block(seed, stream, w0, w1);
  const double u1 = (static_cast<double>(x[0]) + 1.0) * 0x1p-32;  // in (0, 1]
  const double u2 = (static_cast<double>(x[1]) + 0.5) * 0x1p-32;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

// Uniform in [0, 1).
inline double uniform_draw(std::uint64_t seed, std::uint64_t stream, std::uint32_t w0,
                           std::uint32_t w1) {
  const auto x = rng_block(seed, stream, w0, w1);
  return static_cast<double>(x[0]) * 0x1p-32;
}

// Uniform integer in [0, bound) by 64-bit mixing of two words.
inline std::uint64_t uniform_index(std::uint64_t seed, std::uint64_t stream, std::uint32_t w0,
                                   std::uint32_t w1, std::uint64_t bound) {
  const auto x = rng_block(seed, stream, w0, w1);
  const std::uint64_t v = (static_cast<std::uint64_t>(x[0]) << 32) | x[1];
  return v % bound;
}

}  // namespace hypolab

#endif  // HYPOLAB_RNG_HPP
