#pragma once
#include <cstdint>
#include <cmath>
#include <random>

namespace dlab {

// Deterministic stream built on mt19937_64 raw words. The standard library's
// distribution objects are implementation-defined, so we map bits to doubles
// ourselves; identical seeds give identical streams on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() { return std::ldexp(static_cast<double>(eng_() >> 11), -53); }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Box-Muller; caches the second deviate
  double normal() {
    if (have_) {
      have_ = false;
      return cached_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 1e-300);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(th);
    have_ = true;
    return r * std::cos(th);
  }

 private:
  std::mt19937_64 eng_;
  bool have_ = false;
  double cached_ = 0.0;
};

}  // namespace dlab
