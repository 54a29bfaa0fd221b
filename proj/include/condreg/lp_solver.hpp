#pragma once

// Weighted ℓp regression on a coordinate-restricted system with a norm-ball
// constraint, and the residual/loss helpers used around it.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "condreg/conditions.hpp"
#include "condreg/dataset.hpp"
#include "condreg/error.hpp"

namespace condreg {

/// minimize Σ_ℓ weights_ℓ·|⟨a, y_ℓ⟩ − z_ℓ|^p  subject to ‖a‖_p ≤ bound.
struct WeightedSystem {
    Eigen::MatrixXd y;  // rows × s
    Eigen::VectorXd z;
    Eigen::VectorXd weights;
    double p = 2.0;
    double bound = 1.0;

    /// Throws ParameterError unless weights > 0, rows ≥ 1, p ≥ 1, bound > 0.
    void validate() const;
};

/// Rows `examples` of `data` projected onto `coords`, with the given row weights.
WeightedSystem make_system(const Dataset& data, std::span<const std::size_t> coords,
                           std::span<const std::size_t> examples, const Eigen::VectorXd& weights,
                           double p, double bound);

struct SolverOptions {
    double tol = 1e-8;
    int max_iterations = 500;
};

/// Sparse linear rule: values on the listed coordinates, zero elsewhere.
struct Coefficients {
    std::vector<std::size_t> coords;
    Eigen::VectorXd values;
    double objective = 0.0;
    int iterations = 0;
    /// Objective after each accepted iteration of the last descent phase (non-increasing).
    std::vector<double> trace;

    double predict(const Eigen::Ref<const Eigen::RowVectorXd>& y_row) const {
        double v = 0.0;
        for (std::size_t i = 0; i < coords.size(); ++i)
            v += values(static_cast<Eigen::Index>(i)) * y_row(static_cast<Eigen::Index>(coords[i]));
        return v;
    }
};

class SolverError : public Error {
public:
    SolverError(const std::string& what, Coefficients best, double gap)
        : Error(what), best_(std::move(best)), gap_(gap) {}
    const Coefficients& best() const noexcept { return best_; }
    double gap() const noexcept { return gap_; }

private:
    Coefficients best_;
    double gap_;
};

/// Solves the system. The returned coefficients have empty `coords`; callers
/// attach the coordinate indices. Throws SolverError on non-convergence.
Coefficients solve_weighted_lp(const WeightedSystem& sys, const SolverOptions& opts = {});

double lp_objective(const WeightedSystem& sys, const Eigen::VectorXd& a);
double lp_norm(const Eigen::VectorXd& v, double p);

/// Euclidean projection onto {x : ‖x‖_p ≤ b}.
Eigen::VectorXd project_lp_ball(const Eigen::VectorXd& v, double p, double b);

/// w_j = |⟨a, Π y_j⟩ − z_j|^p for every row.
std::vector<double> residual_weights(const Coefficients& a, const Dataset& data, double p);

/// (mean over covered rows of |residual|^p)^(1/p). Throws UndefinedError on zero coverage.
double conditional_empirical_loss(const Coefficients& a, const Dataset& data, const Dnf& c, double p);
double conditional_empirical_loss(const Coefficients& a, const Dataset& data, const RowSet& rows, double p);
/// Same, from precomputed residual weights.
double conditional_loss_from_weights(std::span<const double> weights, const RowSet& rows, double p);

}  // namespace condreg
