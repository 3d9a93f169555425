#pragma once

// Deterministic random draws on top of std::mt19937_64.
//
// The standard distributions (<random>'s uniform_real_distribution etc.) are
// implementation-defined: the same seed yields different streams on different
// standard libraries.  Runs here must be reproducible byte-for-byte across
// toolchains, so the distribution math is spelled out by hand and only the
// engine comes from the standard library.

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace ledgergraph {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1): top 53 bits of the engine output scaled by 2^-53.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform integer on [0, n) without modulo bias (rejection sampling).
    // n must be positive.
    std::uint64_t uniform_int(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    // Standard normal via Box-Muller.  Draws are generated in pairs; the
    // spare is cached so consecutive calls cost one transform per two draws.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);  // log(0) guard; p(reject) ~ 2^-53
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Bernoulli(p).
    bool bernoulli(double p) { return uniform01() < p; }

    // In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[uniform_int(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace ledgergraph
