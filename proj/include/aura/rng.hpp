#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace aura {

// Deterministic RNG wrapper. mt19937_64 output is fully specified by the
// standard; the uniform/normal transforms below are written out explicitly so
// draws are identical across standard libraries (std::normal_distribution is
// implementation-defined and would break cross-toolchain reproducibility).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1) with 53 bits of mantissa.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller, one deviate per call (the sine branch is discarded so the
    // draw count is input-independent).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double normal(double mean, double std) { return mean + std * normal(); }

    // Unbiased index in [0, n) via rejection.
    std::size_t index(std::size_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = eng_();
        while (x >= limit) x = eng_();
        return static_cast<std::size_t>(x % n);
    }

    // Fisher-Yates; std::shuffle is not bit-reproducible across library
    // implementations.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace aura
