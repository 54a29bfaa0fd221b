#include "condreg/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "condreg/error.hpp"
#include "condreg/random.hpp"

namespace condreg {

namespace {

__extension__ typedef unsigned __int128 u128;

double clamped_log(double x) { return std::log(std::max(x, std::exp(1.0))); }

// ceil that ignores representation noise such as 3/0.1² = 300.00000000000006
double robust_ceil(double x) { return std::ceil(x * (1.0 - 1e-12)); }

std::uint64_t mul_checked(std::uint64_t a, std::uint64_t b) {
    if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a)
        throw ParameterError("candidate count overflows 64 bits; use sampled mode (a candidate budget)");
    return a * b;
}

}  // namespace

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    u128 r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
        if (r > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
    }
    return static_cast<std::uint64_t>(r);
}

std::vector<std::size_t> unrank_combination(std::uint64_t rank, std::size_t n, std::size_t k) {
    std::vector<std::size_t> out;
    out.reserve(k);
    std::size_t next = 0;
    for (std::size_t i = 0; i < k; ++i) {
        // smallest element first: count subsets starting with `next`
        while (true) {
            const auto with = binomial(n - next - 1, k - i - 1);
            if (rank < with) break;
            rank -= with;
            ++next;
        }
        out.push_back(next++);
    }
    return out;
}

std::size_t required_sketch_size(double p, std::size_t t, double gamma, double constant) {
    if (!(p >= 1.0)) throw ParameterError("norm exponent p must be at least 1");
    if (t < 1) throw ParameterError("subspace dimension t must be at least 1");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ParameterError("gamma must lie in (0, 1]");
    if (!(constant > 0.0)) throw ParameterError("size constant must be positive");
    const double td = static_cast<double>(t);
    double r;
    if (p == 1.0) {
        r = td * clamped_log(td) / (gamma * gamma);
    } else if (p < 2.0) {
        const double l = clamped_log(td / gamma);
        const double ll = clamped_log(l);
        r = td * l * ll * ll / (gamma * gamma);
    } else if (p == 2.0) {
        r = td / (gamma * gamma);
    } else {
        r = clamped_log(1.0 / gamma) / std::pow(gamma, 5) * std::pow(td, p / 2.0) * clamped_log(td);
    }
    return static_cast<std::size_t>(std::max(1.0, robust_ceil(constant * r)));
}

ExponentRange exponent_grid(double p, std::size_t r, double gamma, std::size_t s) {
    if (!(gamma > 0.0) || !(p >= 1.0) || r < 1) throw ParameterError("exponent grid needs p >= 1, r >= 1, gamma > 0");
    const double low = std::max(0.0, (std::log(static_cast<double>(r)) - std::log(gamma) / p) / gamma);
    const double high = std::log(static_cast<double>(s + 1)) / (2.0 * gamma);
    return {-static_cast<int>(robust_ceil(low)), static_cast<int>(robust_ceil(high))};
}

std::uint64_t compute_m0(double mu, double gamma, double eps, double delta, double b, double p) {
    if (!(mu > 0.0 && mu < 1.0) || !(delta > 0.0 && delta < 1.0))
        throw ParameterError("compute_m0 needs mu and delta in (0, 1)");
    if (!(gamma > 0.0 && eps > 0.0 && b > 0.0 && p >= 1.0))
        throw ParameterError("compute_m0 needs gamma, eps, b > 0 and p >= 1");
    const double ratio = std::pow(b / (gamma * eps), 2.0 * p);
    const double inner = 2.0 * p * b + std::sqrt(2.0 * std::log(12.0 / delta));
    const double value = (ratio * inner * inner + std::log(3.0 / delta)) / mu;
    if (!std::isfinite(value) || value >= 9.0e18)
        throw ParameterError("m0 formula overflows; supply an explicit m0 override");
    return static_cast<std::uint64_t>(robust_ceil(value));
}

nlohmann::json to_json(const SketchOptions& o) {
    nlohmann::json j{{"s", o.s}, {"p", o.p}, {"gamma", o.gamma}, {"fixed_weights", o.fixed_weights}, {"seed", o.seed}};
    if (o.r) j["r"] = *o.r;
    if (o.m0) j["m0"] = *o.m0;
    if (o.candidate_budget) j["candidate_budget"] = *o.candidate_budget;
    if (o.size_constant != 1.0) j["size_constant"] = o.size_constant;
    return j;
}

SketchOptions sketch_options_from_json(const nlohmann::json& j) {
    SketchOptions o;
    o.s = j.at("s").get<std::size_t>();
    o.p = j.at("p").get<double>();
    o.gamma = j.at("gamma").get<double>();
    o.fixed_weights = j.value("fixed_weights", false);
    o.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("r") && !j["r"].is_null()) o.r = j["r"].get<std::size_t>();
    if (j.contains("m0") && !j["m0"].is_null()) o.m0 = j["m0"].get<std::size_t>();
    if (j.contains("candidate_budget") && !j["candidate_budget"].is_null())
        o.candidate_budget = j["candidate_budget"].get<std::uint64_t>();
    o.size_constant = j.value("size_constant", 1.0);
    return o;
}

void SketchConfig::validate() const {
    if (s < 1) throw ParameterError("sparsity s must be at least 1");
    if (!(p >= 1.0)) throw ParameterError("norm exponent p must be at least 1");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ParameterError("gamma must lie in (0, 1]");
    if (r < 1) throw ParameterError("sketch size r must be at least 1");
    if (!(exponents.lo <= 0 && 0 <= exponents.hi)) throw ParameterError("exponent range must contain 0");
    if (m0 < r) throw ParameterError("candidate pool m0 must be at least r");
    if (candidate_budget && *candidate_budget == 0) throw ParameterError("candidate budget must be positive");
}

SketchConfig resolve_sketch(const SketchOptions& opts, double mu, double eps, double delta, double b) {
    SketchConfig c;
    c.s = opts.s;
    c.p = opts.p;
    c.gamma = opts.gamma;
    c.r = opts.r ? *opts.r : required_sketch_size(opts.p, opts.s + 1, opts.gamma, opts.size_constant);
    c.fixed_weights = opts.fixed_weights;
    c.exponents = opts.fixed_weights ? ExponentRange{0, 0} : exponent_grid(opts.p, c.r, opts.gamma, opts.s);
    c.m0 = opts.m0 ? *opts.m0 : static_cast<std::size_t>(compute_m0(mu, opts.gamma, eps, delta, b, opts.p));
    c.candidate_budget = opts.candidate_budget;
    c.seed = opts.seed;
    c.validate();
    return c;
}

std::uint64_t CandidateStream::full_count(const SketchConfig& config, std::size_t d) {
    std::uint64_t exps = 1;
    for (std::size_t i = 0; i < config.r; ++i) exps = mul_checked(exps, config.exponents.levels());
    const auto coords = binomial(d, config.s);
    const auto tuples = binomial(config.m0, config.r);
    if (coords == std::numeric_limits<std::uint64_t>::max() || tuples == std::numeric_limits<std::uint64_t>::max())
        throw ParameterError("candidate count overflows 64 bits; use sampled mode (a candidate budget)");
    return mul_checked(mul_checked(coords, tuples), exps);
}

CandidateStream::CandidateStream(const SketchConfig& config, std::size_t d) : config_(config), d_(d) {
    config_.validate();
    if (d < config_.s) throw ParameterError("need d >= s");
    coord_subsets_ = binomial(d, config_.s);
    example_tuples_ = binomial(config_.m0, config_.r);
    sampled_ = config_.candidate_budget.has_value();
    if (!sampled_) {
        size_ = full_count(config_, d);
        exponent_vectors_ = size_ / coord_subsets_ / example_tuples_;
        return;
    }
    exponent_vectors_ = 1;
    const std::uint64_t budget = *config_.candidate_budget;
    const std::uint64_t max_total =
        example_tuples_ > std::numeric_limits<std::uint64_t>::max() / coord_subsets_
            ? std::numeric_limits<std::uint64_t>::max()
            : coord_subsets_ * example_tuples_;
    size_ = std::min(budget, max_total);
    const std::uint64_t tuples = (size_ + coord_subsets_ - 1) / coord_subsets_;

    Rng rng(config_.seed);
    if (tuples * 4 >= example_tuples_) {
        std::vector<std::uint64_t> all(example_tuples_);
        std::iota(all.begin(), all.end(), std::uint64_t{0});
        for (std::uint64_t i = 0; i < tuples; ++i)
            std::swap(all[i], all[i + rng.below(example_tuples_ - i)]);
        sampled_tuples_.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(tuples));
    } else {
        std::unordered_set<std::uint64_t> seen;
        while (sampled_tuples_.size() < tuples) {
            const auto rank = rng.below(example_tuples_);
            if (seen.insert(rank).second) sampled_tuples_.push_back(rank);
        }
    }
}

SketchCandidate CandidateStream::at(std::uint64_t index) const {
    if (index >= size_) throw ParameterError("candidate index out of range");
    SketchCandidate c;
    c.index = index;
    if (sampled_) {
        c.examples = unrank_combination(sampled_tuples_[index / coord_subsets_], config_.m0, config_.r);
        c.coords = unrank_combination(index % coord_subsets_, d_, config_.s);
        c.exponents.assign(config_.r, 0);
        return c;
    }
    const std::uint64_t per_coord = example_tuples_ * exponent_vectors_;
    c.coords = unrank_combination(index / per_coord, d_, config_.s);
    const std::uint64_t rest = index % per_coord;
    c.examples = unrank_combination(rest / exponent_vectors_, config_.m0, config_.r);
    std::uint64_t e = rest % exponent_vectors_;
    c.exponents.assign(config_.r, 0);
    const auto levels = config_.exponents.levels();
    for (std::size_t i = config_.r; i-- > 0;) {
        c.exponents[i] = config_.exponents.lo + static_cast<int>(e % levels);
        e /= levels;
    }
    return c;
}

}  // namespace condreg
