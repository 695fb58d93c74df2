#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace radsum::rng {

// Deterministic RNG wrapper. All randomness in the project flows through this
// class so that a seed pins every draw bit-for-bit, independent of the
// standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller, spare value cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log1p(-u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_int(std::uint64_t n) {
        // Rejection sampling keeps the distribution exact.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = eng_();
        while (v >= limit) {
            v = eng_();
        }
        return v % n;
    }

    std::uint64_t raw() { return eng_(); }

    // Fisher-Yates shuffle.
    template <class T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i + 1));
            std::swap(v[i], v[j]);
        }
    }

private:
    std::mt19937_64 eng_;
    double spare_{0.0};
    bool has_spare_{false};
};

}  // namespace radsum::rng

namespace radsum {
using rng::Rng;  // used by nearly every module; hoist for convenience
}
