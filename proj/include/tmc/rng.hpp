#pragma once

#include <cstdint>
#include <random>

namespace tmc {

/// std::mt19937_64 with fixed, platform-independent conversions. Streams are
/// derived from (master seed, stream index) through std::seed_seq so that
/// episodes can be replayed independently.
class Rng {
   public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    static Rng stream(std::uint64_t master, std::uint64_t index);

    std::uint64_t next() { return engine_(); }
    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform on [0, n); n > 0. Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t n);
    bool bernoulli(double p) { return uniform() < p; }

   private:
    std::mt19937_64 engine_;
};

inline Rng Rng::stream(std::uint64_t master, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    Rng r(0);
    r.engine_.seed(seq);
    return r;
}

inline std::uint64_t Rng::below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

}  // namespace tmc
