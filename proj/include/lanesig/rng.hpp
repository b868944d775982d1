#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace lanesig {

// splitmix64 finalizer; used to derive child seeds from a base seed plus
// arbitrary integer coordinates so that every generated object has an
// independent, reproducible stream.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base) { return mix64(base); }

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t first, Rest... rest) {
    return derive_seed(mix64(base ^ mix64(first)), rest...);
}

// Deterministic random source. Every distribution is mapped explicitly from
// raw mt19937_64 output (no std::*_distribution, whose mappings vary between
// standard library implementations), so any draw can be recomputed
// independently from the seed:
//   uniform01():   (x >> 11) * 2^-53                      in [0, 1)
//   uniform01p():  ((x >> 11) + 1) * 2^-53                in (0, 1]
//   normal():      Box-Muller, r = sqrt(-2 ln u1p), z = r cos(2 pi u2),
//                  exactly two raw draws per call, no caching
//   uniform_int(n): rejection sampling, threshold = (2^64 - n) mod n
//   exponential(rate): -ln(u1p) / rate
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform01p() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    double normal(double mean = 0.0, double sigma = 1.0) {
        const double u1 = uniform01p();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + sigma * r * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Unbiased integer in [0, n); n >= 1.
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Inclusive integer range [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(
                        uniform_index(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    double exponential(double rate) { return -std::log(uniform01p()) / rate; }

  private:
    std::mt19937_64 eng_;
};

}  // namespace lanesig
