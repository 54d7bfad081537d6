#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace fcs {

/// Stateless 64-bit finalizer (splitmix64 output function).
inline constexpr std::uint64_t mix_bits(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent generator from a master seed and a key path.
///
/// The derivation is a counter-style hash chain: the stream for a given
/// path depends only on (master, path), never on how many other streams
/// exist. Trial k therefore sees the same stream regardless of the total
/// number of trials.
inline std::mt19937_64 make_stream(std::uint64_t master,
                                   std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix_bits(master);
  for (std::uint64_t k : path) h = mix_bits(h ^ mix_bits(k));
  return std::mt19937_64(h);
}

/// Uniform double in [0, 1), 53-bit resolution.
inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

/// Uniform double in the open interval (0, 1).
inline double uniform01_open(std::mt19937_64& g) {
  return (static_cast<double>(g() >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal draw via Box-Muller. Uses exactly two generator words
/// per call so stream consumption is fully specified.
inline double standard_normal(std::mt19937_64& g) {
  const double u1 = uniform01_open(g);
  const double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

/// Stream purposes used by the trial harness. Keeping the data-generating
/// streams independent of lambda and method gives common random numbers
/// across sweep cells, so per-trial comparisons (e.g. Jaccard between
/// methods) see identical training data and test draws.
enum class StreamPurpose : std::uint64_t {
  training = 1,
  design = 2,
  conformal = 3,
  calibration = 4,
};

inline std::mt19937_64 trial_stream(std::uint64_t master, StreamPurpose purpose,
                                    std::uint64_t n, std::uint64_t trial) {
  return make_stream(master,
                     {static_cast<std::uint64_t>(purpose), n, trial});
}

}  // namespace fcs
