#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cogfx {

// Seeded source whose output stream is identical on every platform.
// std::mt19937_64 is fully specified by the standard; the distributions in
// <random> are not, so bounded draws are done here by rejection.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  // Uniform double in [0, 1).
  double uniform01();

 private:
  std::mt19937_64 engine_;
};

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t splitmix64(std::uint64_t x);

// Deterministic standard-normal deviate keyed by (text, seed).
double hashed_normal(std::string_view text, std::uint64_t seed);

// Deterministic uniform in [0, 1) keyed by (text, seed, stream).
double hashed_uniform(std::string_view text, std::uint64_t seed,
                      std::uint64_t stream);

}  // namespace cogfx
