#pragma once

// Weighted conditional distribution search: given Boolean rows with
// nonnegative weights, find a k-DNF covering about a μ fraction of the rows
// with small conditional mean weight.

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "condreg/bool_matrix.hpp"
#include "condreg/conditions.hpp"

namespace condreg {

struct WeightedBooleanSample {
    BoolMatrix x;
    std::vector<double> w;
    double weight_bound = std::numeric_limits<double>::infinity();

    /// Throws ParameterError unless lengths agree and every w is in [0, weight_bound].
    void validate() const;
};

enum class WtCondVariant { threshold, greedy };

WtCondVariant parse_wtcond_variant(const std::string& name);
std::string to_string(WtCondVariant v);

struct ConditionResult {
    Dnf condition;
    std::vector<std::size_t> term_ids;  // indices into the searcher's term list
    RowSet rows;
    std::size_t covered = 0;
    double mean_weight = 0.0;
    // threshold: |c|/(1−η), the certified factor on the conditional mean weight;
    // greedy: observed mean_weight / ε.
    double approximation_factor = 0.0;
    // ε at which the condition was built (ε̂ on return for reference-class search).
    double eps_level = 0.0;
    double mu_level = 0.0;
};

/// Searches over every term of at most k literals on a fixed Boolean sample.
/// Term row sets are computed once, so one searcher serves many weight vectors.
class ConditionSearch {
public:
    ConditionSearch(const BoolMatrix& x, std::size_t k);

    const TermIndex& index() const noexcept { return index_; }
    std::size_t sample_size() const noexcept { return index_.sample_size(); }
    std::size_t arity() const noexcept { return n_; }

    /// Σ w over each term's rows.
    std::vector<double> term_weight_sums(std::span<const double> w) const;

    /// Disjunction of every term whose weight sum is ≤ εμm (zero-coverage terms
    /// dropped); nullopt (INFEASIBLE) unless it covers ≥ (1−η)μm rows.
    std::optional<ConditionResult> threshold(std::span<const double> w, double mu, double eps, double eta) const;

    /// Weighted partial-cover greedy over terms whose mean weight is ≤ (1+η)ε:
    /// repeatedly adds the term with least (added weight)/(newly covered rows)
    /// until (1−η)μm rows are covered. Ties go to the earlier term.
    std::optional<ConditionResult> greedy(std::span<const double> w, double mu, double eps, double eta) const;

    std::optional<ConditionResult> run(WtCondVariant variant, std::span<const double> w, double mu, double eps,
                                       double eta) const;

    /// Reference-class search anchored at x_star: geometric sweeps over μ
    /// (1 down to μ0) and ε (ε̂ down to ε0/(1+η)) with the threshold rule.
    /// nullopt means no class was found.
    std::optional<ConditionResult> reference_class(std::span<const double> w, BoolVector x_star, double mu0,
                                                   double eps0, double eta) const;

private:
    ConditionResult make_result(std::vector<std::size_t> ids, std::span<const double> w) const;

    TermIndex index_;
    std::size_t n_ = 0;
};

std::optional<ConditionResult> wtcond_threshold(const WeightedBooleanSample& sample, double mu, double eps,
                                                double eta, std::size_t k);
std::optional<ConditionResult> wtcond_greedy(const WeightedBooleanSample& sample, double mu, double eps,
                                             double eta, std::size_t k);
std::optional<ConditionResult> reference_class_search(const WeightedBooleanSample& sample, BoolVector x_star,
                                                      double mu0, double eps0, double eta, std::size_t k);

}  // namespace condreg
