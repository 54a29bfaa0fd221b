#pragma once

// Sketch sizes, the weight-exponent grid, the candidate pool size m0, and
// enumeration of sketch candidates (coordinate subset, example tuple,
// weight exponents).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"

namespace condreg {

/// Rows needed for a (1±γ) ℓp sparsifier of a t-dimensional subspace, with
/// leading constant `constant`. Logarithm arguments are clamped below at e.
std::size_t required_sketch_size(double p, std::size_t t, double gamma, double constant = 1.0);

struct ExponentRange {
    int lo = 0;
    int hi = 0;
    std::size_t levels() const { return static_cast<std::size_t>(hi - lo + 1); }
};

/// Integer exponents q with (1+γ)^q covering the admissible sketch weights.
ExponentRange exponent_grid(double p, std::size_t r, double gamma, std::size_t s);

/// Candidate pool size from the sample-complexity bound. Throws ParameterError
/// when the value overflows (supply an explicit m0 instead).
std::uint64_t compute_m0(double mu, double gamma, double eps, double delta, double b, double p);

/// User-facing sketch settings (JSON: {s, p, gamma, r?, m0?, fixed_weights, candidate_budget?, seed}).
struct SketchOptions {
    std::size_t s = 2;
    double p = 2.0;
    double gamma = 1.0;
    std::optional<std::size_t> r;
    std::optional<std::size_t> m0;
    bool fixed_weights = false;
    // Present: sampled mode with this many candidates. Absent: full enumeration.
    std::optional<std::uint64_t> candidate_budget;
    std::uint64_t seed = 0;
    double size_constant = 1.0;
};

nlohmann::json to_json(const SketchOptions& o);
SketchOptions sketch_options_from_json(const nlohmann::json& j);

/// Fully resolved configuration.
struct SketchConfig {
    std::size_t s = 2;
    double p = 2.0;
    double gamma = 1.0;
    std::size_t r = 3;
    ExponentRange exponents;
    std::size_t m0 = 0;
    bool fixed_weights = false;
    std::optional<std::uint64_t> candidate_budget;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Fills in r (from required_sketch_size with t = s+1), the exponent grid and
/// m0 (from compute_m0 with the task parameters) where the options omit them.
SketchConfig resolve_sketch(const SketchOptions& opts, double mu, double eps, double delta, double b);

struct SketchCandidate {
    std::vector<std::size_t> coords;    // s-subset of [d], ascending
    std::vector<std::size_t> examples;  // r-subset of [m0], ascending
    std::vector<int> exponents;         // r entries in [q_lo, q_hi]
    std::uint64_t index = 0;            // position in the stream

    bool operator==(const SketchCandidate&) const = default;
};

/// Random-access candidate sequence. Full mode is lexicographic in
/// (coords, examples, exponents). Sampled mode draws distinct example tuples
/// with the config seed and pairs each with every coordinate subset
/// (tuple-major), exponents pinned to 0. Any index range can be produced
/// independently, so disjoint ranges can be consumed concurrently.
class CandidateStream {
public:
    CandidateStream(const SketchConfig& config, std::size_t d);

    std::uint64_t size() const noexcept { return size_; }
    bool sampled() const noexcept { return sampled_; }
    SketchCandidate at(std::uint64_t index) const;

    /// C(d,s)·C(m0,r)·levels^r; throws ParameterError on 64-bit overflow.
    static std::uint64_t full_count(const SketchConfig& config, std::size_t d);

private:
    SketchConfig config_;
    std::size_t d_;
    bool sampled_ = false;
    std::uint64_t size_ = 0;
    std::uint64_t coord_subsets_ = 0;
    std::uint64_t example_tuples_ = 0;
    std::uint64_t exponent_vectors_ = 0;
    std::vector<std::uint64_t> sampled_tuples_;  // ranks of the drawn example tuples
};

/// Lexicographic rank → k-subset of {0..n-1}.
std::vector<std::size_t> unrank_combination(std::uint64_t rank, std::size_t n, std::size_t k);
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);  // saturates at UINT64_MAX

}  // namespace condreg
