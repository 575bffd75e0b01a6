#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "svc/errors.hpp"

namespace svc {

/// Seeded random number generator with self-contained samplers.
///
/// All draw algorithms are implemented here rather than through
/// std:: distributions so that a given seed produces the same stream on
/// every standard library, and so that each draw consumes a predictable
/// portion of the underlying engine. Normal draws use Box-Muller with no
/// cached second variate; gamma draws use Marsaglia-Tsang rejection.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1]; safe as a log() argument.
  double uniform_open() { return 1.0 - uniform(); }

  /// Standard normal draw. Consumes exactly two uniforms.
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Gamma(shape, scale) draw, shape > 0.
  double gamma(double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0)) {
      throw DomainError("gamma draw requires shape > 0 and scale > 0");
    }
    if (shape < 1.0) {
      // Boost to shape+1, then scale back by u^{1/shape}.
      const double u = uniform_open();
      return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = 0.0;
      double v = 0.0;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_open();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) {
        return d * v * scale;
      }
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
        return d * v * scale;
      }
    }
  }

  /// Inverse-gamma(shape, scale) draw: density proportional to
  /// x^{-shape-1} exp(-scale/x), mean scale/(shape-1) for shape > 1.
  double inverse_gamma(double shape, double scale) {
    return 1.0 / gamma(shape, 1.0 / scale);
  }

  /// Deterministically derived child generator for independent streams
  /// (e.g. one per simulation replication).
  static Rng derive(std::uint64_t master_seed, std::uint64_t stream) {
    // splitmix64 finalizer over the combined word
    std::uint64_t z = master_seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return Rng(z ^ (z >> 31));
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  std::mt19937_64 engine_;
};

}  // namespace svc
