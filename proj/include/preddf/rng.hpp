#ifndef PREDDF_RNG_HPP
#define PREDDF_RNG_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "preddf/common.hpp"

namespace preddf::rng {

inline constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ (mix64(b + kGamma) + (a << 6) + (a >> 2)));
}

// Counter-based stream: output j is mix64(key + j*gamma), so streams keyed by
// (master seed, stream id) are independent and random-access. Values never
// depend on how other streams are consumed, which keeps every Monte Carlo
// replicate reproducible regardless of scheduling.
class Stream {
public:
    explicit Stream(std::uint64_t key) : key_(key) {}

    static Stream keyed(std::uint64_t seed, std::uint64_t id0 = 0, std::uint64_t id1 = 0) {
        return Stream(hash_combine(hash_combine(mix64(seed + kGamma), id0), id1));
    }

    std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGamma); }

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1); safe as a log argument.
    double uniform_open() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // Box-Muller; the second variate of each pair is cached.
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform_open()));
        const double t = 2.0 * M_PI * uniform();
        cached_ = r * std::sin(t);
        have_cached_ = true;
        return r * std::cos(t);
    }

    // Marsaglia-Tsang; boosted for shape < 1.
    double gamma(double shape) {
        if (shape <= 0.0) throw input_error("rng: gamma shape must be positive");
        if (shape < 1.0) {
            const double u = uniform_open();
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
            const double u = uniform_open();
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
        }
    }

    // Symmetric Beta(a, a) rescaled to (-1, 1).
    double beta_symmetric_pm1(double a) {
        const double x = gamma(a);
        const double y = gamma(a);
        return (x - y) / (x + y);
    }

    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace preddf::rng

#endif
