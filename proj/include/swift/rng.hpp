#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace swift {

// splitmix64 finalizer; decorrelates derived stream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/**
 * Deterministic random stream. All draws are defined in terms of the
 * standard-pinned mt19937_64 output, so sequences are stable across
 * compilers and platforms (std::*_distribution is deliberately avoided).
 */
class Rng {
 public:
  Rng() : Rng(0, 0) {}
  // One master seed; streams are derived by fixed offsets.
  Rng(std::uint64_t master, std::uint64_t stream)
      : gen_(mix64(mix64(master) ^ mix64(stream ^ 0xA5A5A5A5A5A5A5A5ull))) {}

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; the spare value is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    constexpr double two_pi = 6.283185307179586476925286766559;
    double u1 = 1.0 - uniform01();  // (0, 1]
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(two_pi * u2);
    have_spare_ = true;
    return r * std::cos(two_pi * u2);
  }

  // Uniform integer in [0, n). Modulo bias is < 2^-32 for the sizes used here.
  std::uint64_t below(std::uint64_t n) { return gen_() % n; }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

template <class T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
  for (std::size_t k = v.size(); k > 1; --k) {
    std::swap(v[k - 1], v[rng.below(k)]);
  }
}

}  // namespace swift
