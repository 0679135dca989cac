#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include "teachopt/errors.hpp"

namespace teachopt {

/// Seeded 64-bit Mersenne Twister (seed passed through splitmix64) with exact
/// 53-bit [0,1) doubles. The engine state round-trips through text for resume.
class Rng {
 public:
  using Engine = std::mt19937_64;

  explicit Rng(std::uint64_t seed = 1) : engine_(mix(seed)) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  /// Independent child stream; advances this generator once.
  Rng split() { return Rng(engine_()); }

  std::string state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void restore(const std::string& state) {
    std::istringstream is(state);
    Engine e;
    is >> e;
    if (is.fail()) throw ConfigError("corrupt random generator state");
    engine_ = e;
  }

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  Engine engine_;
};

}  // namespace teachopt
