#include "cogfx/random.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "cogfx/error.hpp"

namespace cogfx {

std::int64_t SeededRng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw ConfigError("uniform_int: empty range");
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(next());  // full 64-bit range
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % span;
  std::uint64_t draw;
  do {
    draw = next();
  } while (draw >= limit);
  return lo + static_cast<std::int64_t>(draw % span);
}

double SeededRng::uniform01() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double hashed_uniform(std::string_view text, std::uint64_t seed,
                      std::uint64_t stream) {
  const std::uint64_t h =
      splitmix64(fnv1a64(text) ^ splitmix64(seed ^ splitmix64(stream)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double hashed_normal(std::string_view text, std::uint64_t seed) {
  // Box-Muller on two hashed uniforms; u1 is kept away from zero.
  const double u1 = 1.0 - hashed_uniform(text, seed, 1);
  const double u2 = hashed_uniform(text, seed, 2);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace cogfx
