#pragma once

#include "rsr/types.hpp"

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace rsr {

// std::mt19937_64 output is pinned by the standard; the distribution
// transforms below are our own so that sample paths do not depend on the
// standard library implementation.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  // Independent stream keyed by (master, id...) for parallel replicates.
  static std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> ids) {
    std::uint64_t x = master;
    std::uint64_t h = splitmix(x);
    for (std::uint64_t id : ids) {
      x ^= id + 0x9E3779B97F4A7C15ULL + (x << 6) + (x >> 2);
      h ^= splitmix(x);
      h = splitmix(h);
    }
    return h;
  }

  static RngStream derive(std::uint64_t master, std::initializer_list<std::uint64_t> ids) {
    return RngStream(derive_seed(master, ids));
  }

  // Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1]: safe as a log() argument.
  double uniform_pos() { return 1.0 - uniform(); }

  // Marsaglia polar method with one cached deviate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  Vector normal_vector(Index n) {
    Vector z(n);
    for (Index i = 0; i < n; ++i) z[i] = normal();
    return z;
  }

  // Standard gamma (unit scale), Marsaglia-Tsang; shape < 1 boosted.
  double gamma(double shape) {
    if (!(shape > 0.0)) throw Error(Errc::invalid_parameter, "gamma shape must be > 0");
    if (shape < 1.0) {
      const double u = uniform_pos();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // Gamma with the shape/rate convention used by the full conditionals.
  double gamma_rate(double shape, double rate) {
    if (!(rate > 0.0)) throw Error(Errc::invalid_parameter, "gamma rate must be > 0");
    return gamma(shape) / rate;
  }

  long poisson(double mean) {
    if (!(mean >= 0.0)) throw Error(Errc::invalid_parameter, "poisson mean must be >= 0");
    if (mean == 0.0) return 0;
    if (mean < 30.0) {
      // Knuth product-of-uniforms.
      const double limit = std::exp(-mean);
      long k = 0;
      double prod = uniform_pos();
      while (prod > limit) {
        ++k;
        prod *= uniform_pos();
      }
      return k;
    }
    return poisson_ptrs(mean);
  }

 private:
  // Hoermann's transformed rejection (PTRS), valid for mean >= 10.
  long poisson_ptrs(double mean) {
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      const double u = uniform() - 0.5;
      const double v = uniform_pos();
      const double us = 0.5 - std::abs(u);
      const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
      if (us >= 0.07 && v <= vr) return static_cast<long>(k);
      if (k < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
          k * loglam - mean - std::lgamma(k + 1.0)) {
        return static_cast<long>(k);
      }
    }
  }

  static std::uint64_t splitmix(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rsr
