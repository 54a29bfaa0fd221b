#pragma once

#include <cstdint>
#include <random>

namespace condreg {

// Portable random source ("condreg-rng-v1").
//
// std::mt19937_64 output is fixed by the standard, but the standard
// distributions are not, so the conversions to uniform doubles, bounded
// integers and Gaussians are done here. Every random draw in the library goes
// through this class, which makes all outputs bit-reproducible across
// platforms for a fixed seed.
class Rng {
public:
    static constexpr const char* kName = "condreg-rng-v1";

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound). Rejection keeps it exactly unbiased.
    std::uint64_t below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % bound;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via the Marsaglia polar method (caches the second draw).
    double normal();

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Child generator for an independent stream, derived deterministically.
    Rng split(std::uint64_t stream) {
        std::seed_seq seq{static_cast<std::uint32_t>(engine_()), static_cast<std::uint32_t>(stream),
                          static_cast<std::uint32_t>(stream >> 32)};
        std::uint32_t words[2];
        seq.generate(words, words + 2);
        return Rng((static_cast<std::uint64_t>(words[0]) << 32) | words[1]);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace condreg
