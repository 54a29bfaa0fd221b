#pragma once

// Conditional sparse ℓp regression: enumerate sketch candidates, fit each
// sparsified system, label every row by its residual, and search for a k-DNF
// on which the candidate rule fits well. Also the reference-class variant,
// the sup-norm baseline, holdout evaluation and risk-coverage tables.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "condreg/condition_search.hpp"
#include "condreg/conditions.hpp"
#include "condreg/dataset.hpp"
#include "condreg/lp_solver.hpp"
#include "condreg/sketch.hpp"
#include "json.hpp"

namespace condreg {

enum class SearchMode { first_found, exhaustive_best };

SearchMode parse_search_mode(const std::string& name);  // "first" | "best"
std::string to_string(SearchMode m);

struct FitParams {
    SketchOptions sketch;
    double mu = 0.25;     // target coverage
    double eps = 0.1;     // target conditional ℓp loss
    double eta = 0.05;    // coverage slack
    double delta = 0.1;   // confidence, only used by the m0 formula
    std::size_t k = 2;    // literals per term
    std::optional<double> alpha;  // acceptance multiplier; see default_alpha
    std::size_t expected_terms = 1;  // g in the default greedy alpha
    SearchMode mode = SearchMode::first_found;
    WtCondVariant variant = WtCondVariant::greedy;
    bool screen = true;
    unsigned threads = 0;  // 0: all hardware threads
    SolverOptions solver;

    void validate() const;
};

/// Fit settings for the synthetic benchmarks ("table2-row1", "table2-row2"):
/// fixed weights, greedy search, a 20000-candidate budget, and ε at 1.3σ of
/// the planted noise. Throws ParameterError for other names.
FitParams fit_preset(const std::string& name);

/// 4·g·ln m for greedy, 4·√(n^k) for threshold.
double default_alpha(const FitParams& params, std::size_t n, std::size_t m);

struct FitResult {
    Coefficients coefficients;  // carries the coordinate indices
    Dnf condition;
    double p = 2.0;
    double loss = 0.0;  // empirical conditional ℓp loss on the training sample
    double coverage = 0.0;
    std::size_t covered = 0;
    double approximation_factor = 0.0;
    SketchCandidate candidate;
    std::uint64_t seed = 0;
    // Sup-norm baseline only: largest inlier residual on the condition.
    std::optional<double> sup_residual;
    // Not serialized.
    double wall_seconds = 0.0;
    std::uint64_t candidates_evaluated = 0;
};

/// JSON with 1-based coordinates, attributes and row indices.
nlohmann::json to_json(const FitResult& r);
FitResult fit_result_from_json(const nlohmann::json& j);

/// Runs the candidate loop on `data` (the first m0 rows form the candidate
/// pool; the acceptance check uses all rows). nullopt means INFEASIBLE.
std::optional<FitResult> fit_conditional(const Dataset& data, const FitParams& params);

/// Necessary condition for a candidate to pass the final check: at least half
/// of (1−η)μm rows have residual weight ≤ 2(αε)^p (Markov on the covered rows).
bool candidate_screen(std::span<const double> weights, const FitParams& params, double alpha);
bool candidate_screen(const Coefficients& a, const Dataset& data, const FitParams& params);

/// Reference-class regression at query point x_star: the candidate loop with
/// reference-class search in place of condition search; keeps the class with
/// the least conditional loss. nullopt means no class was found.
std::optional<FitResult> fit_reference_class(const Dataset& data, BoolVector x_star, double mu0, double eps0,
                                             const FitParams& params);

struct SupNormParams {
    std::size_t s = 2;
    double eps_inf = 0.24;  // inlier threshold on |residual|
    double mu = 0.25;
    double eta = 0.05;      // a term is kept when ≥ (1−η) of its rows are inliers
    std::size_t k = 2;
    std::size_t m0 = 200;
    std::optional<std::uint64_t> candidate_budget;
    std::uint64_t seed = 0;
    unsigned threads = 0;

    void validate() const;
};

/// Chebyshev (minimax) fit of s+1 equations in s unknowns.
Eigen::VectorXd chebyshev_fit(const Eigen::MatrixXd& y, const Eigen::VectorXd& z);

/// Conditional sparse sup-norm regression baseline. Among candidate fits whose
/// condition covers ≥ μm rows, returns the one with the smallest largest inlier
/// residual on its condition; `loss` is the conditional RMS error.
std::optional<FitResult> fit_supnorm_baseline(const Dataset& data, const SupNormParams& params);

struct Evaluation {
    std::size_t covered = 0;
    double coverage = 0.0;
    std::optional<double> loss;  // undefined when nothing is covered
};

/// Holdout coverage and conditional loss of a fit. With `refit`, the rule is
/// first re-solved on the training rows the condition selects.
Evaluation evaluate(const FitResult& fit, const Dataset& train, const Dataset& holdout, bool refit);

struct RcRow {
    double mu = 0.0;
    double coverage = 0.0;
    std::optional<double> loss;
    std::string status;  // ok | infeasible | empty
};

/// One fit + evaluation per μ (grid must be non-increasing in (0, 1]; repeats give repeated rows).
std::vector<RcRow> rc_curve(const Dataset& train, const Dataset& test, std::span<const double> mu_grid,
                            const FitParams& params, bool refit = true);

/// CSV with header "mu,coverage,loss,status"; undefined loss is written empty.
void write_rc_csv(std::ostream& out, std::span<const RcRow> rows);

}  // namespace condreg
