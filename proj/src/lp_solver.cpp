#include "condreg/lp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace condreg {

void WeightedSystem::validate() const {
    if (y.rows() < 1) throw ParameterError("weighted system needs at least one row");
    if (z.size() != y.rows() || weights.size() != y.rows())
        throw ParameterError("weighted system shapes disagree");
    if (!(p >= 1.0)) throw ParameterError("norm exponent p must be at least 1");
    if (!(bound > 0.0)) throw ParameterError("coefficient bound must be positive");
    for (Eigen::Index i = 0; i < weights.size(); ++i)
        if (!(weights(i) > 0.0) || !std::isfinite(weights(i)))
            throw ParameterError("row weights must be positive and finite");
}

WeightedSystem make_system(const Dataset& data, std::span<const std::size_t> coords,
                           std::span<const std::size_t> examples, const Eigen::VectorXd& weights,
                           double p, double bound) {
    WeightedSystem sys;
    const auto r = static_cast<Eigen::Index>(examples.size());
    sys.y.resize(r, static_cast<Eigen::Index>(coords.size()));
    sys.z.resize(r);
    for (Eigen::Index l = 0; l < r; ++l) {
        const auto row = static_cast<Eigen::Index>(examples[static_cast<std::size_t>(l)]);
        if (row >= static_cast<Eigen::Index>(data.size())) throw ParameterError("example index out of range");
        for (std::size_t i = 0; i < coords.size(); ++i) {
            if (coords[i] >= data.d()) throw ParameterError("coordinate index out of range");
            sys.y(l, static_cast<Eigen::Index>(i)) = data.y(row, static_cast<Eigen::Index>(coords[i]));
        }
        sys.z(l) = data.z(row);
    }
    sys.weights = weights;
    sys.p = p;
    sys.bound = bound;
    return sys;
}

double lp_norm(const Eigen::VectorXd& v, double p) {
    if (p == 2.0) return v.norm();
    if (p == 1.0) return v.lpNorm<1>();
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += std::pow(std::abs(v(i)), p);
    return std::pow(s, 1.0 / p);
}

namespace {

double abs_pow(double r, double p) {
    const double a = std::abs(r);
    if (p == 2.0) return a * a;
    if (p == 1.0) return a;
    return std::pow(a, p);
}

// Solve t + lambda·p·t^(p-1) = v for t in [0, v].
double shrink(double v, double lambda, double p) {
    if (p == 1.0) return std::max(v - lambda, 0.0);
    double lo = 0.0, hi = v;
    for (int it = 0; it < 100 && hi - lo > 1e-15 * std::max(1.0, v); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid + lambda * p * std::pow(mid, p - 1.0) > v) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

// Smoothed objective Σ w (r² + δ²)^{p/2} + λ Σ (a² + δ²)^{p/2} and its IRLS step.
class SmoothedProblem {
public:
    SmoothedProblem(const WeightedSystem& sys, double delta, double penalty)
        : sys_(sys), delta2_(delta * delta), penalty_(penalty) {}

    double value(const Eigen::VectorXd& a) const {
        const Eigen::VectorXd r = sys_.y * a - sys_.z;
        double f = 0.0;
        for (Eigen::Index i = 0; i < r.size(); ++i) f += sys_.weights(i) * std::pow(r(i) * r(i) + delta2_, sys_.p / 2);
        if (penalty_ > 0.0)
            for (Eigen::Index i = 0; i < a.size(); ++i) f += penalty_ * std::pow(a(i) * a(i) + delta2_, sys_.p / 2);
        return f;
    }

    Eigen::VectorXd gradient(const Eigen::VectorXd& a) const {
        const Eigen::VectorXd r = sys_.y * a - sys_.z;
        Eigen::VectorXd g = Eigen::VectorXd::Zero(a.size());
        for (Eigen::Index i = 0; i < r.size(); ++i)
            g += sys_.p * sys_.weights(i) * std::pow(r(i) * r(i) + delta2_, sys_.p / 2 - 1) * r(i) * sys_.y.row(i).transpose();
        if (penalty_ > 0.0)
            for (Eigen::Index i = 0; i < a.size(); ++i)
                g(i) += sys_.p * penalty_ * std::pow(a(i) * a(i) + delta2_, sys_.p / 2 - 1) * a(i);
        return g;
    }

    // Minimizer of the quadratic majorizer at a (minimum-norm when singular).
    Eigen::VectorXd irls_target(const Eigen::VectorXd& a) const {
        const Eigen::VectorXd r = sys_.y * a - sys_.z;
        const Eigen::Index rows = sys_.y.rows(), s = sys_.y.cols();
        const Eigen::Index extra = penalty_ > 0.0 ? s : 0;
        Eigen::MatrixXd A(rows + extra, s);
        Eigen::VectorXd b(rows + extra);
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double w = std::sqrt(sys_.weights(i) * std::pow(r(i) * r(i) + delta2_, sys_.p / 2 - 1));
            A.row(i) = w * sys_.y.row(i);
            b(i) = w * sys_.z(i);
        }
        if (extra) {
            A.bottomRows(s).setZero();
            b.tail(s).setZero();
            for (Eigen::Index i = 0; i < s; ++i)
                A(rows + i, i) = std::sqrt(penalty_ * std::pow(a(i) * a(i) + delta2_, sys_.p / 2 - 1));
        }
        return A.completeOrthogonalDecomposition().solve(b);
    }

private:
    const WeightedSystem& sys_;
    double delta2_;
    double penalty_;
};

struct DescentResult {
    Eigen::VectorXd a;
    std::vector<double> trace;
    int iterations = 0;
    bool converged = false;
    double last_gap = 0.0;
};

DescentResult run_irls(const SmoothedProblem& prob, Eigen::VectorXd a, const SolverOptions& opts) {
    DescentResult res;
    double f = prob.value(a);
    res.trace.push_back(f);
    for (int it = 0; it < opts.max_iterations; ++it) {
        const Eigen::VectorXd dir = prob.irls_target(a) - a;
        double t = 1.0, f_new = prob.value(a + dir);
        while (f_new > f && t > 1e-12) {
            t *= 0.5;
            f_new = prob.value(a + t * dir);
        }
        res.iterations = it + 1;
        if (!(f_new <= f)) {  // no descent along the IRLS direction: stationary
            res.converged = true;
            break;
        }
        a += t * dir;
        res.last_gap = f - f_new;
        f = f_new;
        res.trace.push_back(f);
        if (res.last_gap <= opts.tol * (1.0 + f) && t * dir.norm() <= std::sqrt(opts.tol) * (1.0 + a.norm())) {
            res.converged = true;
            break;
        }
    }
    res.a = std::move(a);
    return res;
}

DescentResult run_projected_gradient(const SmoothedProblem& prob, const WeightedSystem& sys,
                                     Eigen::VectorXd a, const SolverOptions& opts) {
    DescentResult res;
    double f = prob.value(a);
    res.trace.push_back(f);
    double step = 1.0;
    for (int it = 0; it < opts.max_iterations; ++it) {
        const Eigen::VectorXd g = prob.gradient(a);
        bool moved = false;
        for (int bt = 0; bt < 60; ++bt) {
            const Eigen::VectorXd cand = project_lp_ball(a - step * g, sys.p, sys.bound);
            const double fc = prob.value(cand);
            if (fc < f) {
                res.last_gap = f - fc;
                a = cand;
                f = fc;
                moved = true;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        res.iterations = it + 1;
        if (!moved || res.last_gap <= opts.tol * (1.0 + f)) {
            if (moved) res.trace.push_back(f);
            res.converged = true;
            break;
        }
        res.trace.push_back(f);
    }
    res.a = std::move(a);
    return res;
}

Coefficients finish(const WeightedSystem& sys, Eigen::VectorXd a, int iterations, std::vector<double> trace) {
    const double norm = lp_norm(a, sys.p);
    if (norm > sys.bound) a *= sys.bound / norm;  // rounding only
    Coefficients c;
    c.values = std::move(a);
    c.objective = lp_objective(sys, c.values);
    c.iterations = iterations;
    c.trace = std::move(trace);
    return c;
}

Coefficients solve_l2(const WeightedSystem& sys) {
    const Eigen::VectorXd sw = sys.weights.cwiseSqrt();
    const Eigen::MatrixXd A = sw.asDiagonal() * sys.y;
    const Eigen::VectorXd b = sw.cwiseProduct(sys.z);
    Eigen::VectorXd a = A.completeOrthogonalDecomposition().solve(b);
    if (a.norm() > sys.bound) {
        // KKT for the ball: (G + λI) a = h with ‖a(λ)‖₂ = bound.
        const Eigen::MatrixXd G = A.transpose() * A;
        const Eigen::VectorXd h = A.transpose() * b;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
        const Eigen::VectorXd e = eig.eigenvalues().cwiseMax(0.0);
        const Eigen::VectorXd c = eig.eigenvectors().transpose() * h;
        auto norm_at = [&](double lambda) {
            double s = 0.0;
            for (Eigen::Index i = 0; i < e.size(); ++i) {
                const double den = e(i) + lambda;
                if (den > 0.0) s += (c(i) / den) * (c(i) / den);
            }
            return std::sqrt(s);
        };
        double lo = 0.0, hi = h.norm() / sys.bound;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double nm = norm_at(mid);
            if (std::abs(nm - sys.bound) <= 1e-8 * sys.bound) {
                lo = hi = mid;
                break;
            }
            (nm > sys.bound ? lo : hi) = mid;
        }
        const double lambda = hi;
        Eigen::VectorXd coef(e.size());
        for (Eigen::Index i = 0; i < e.size(); ++i) coef(i) = e(i) + lambda > 0.0 ? c(i) / (e(i) + lambda) : 0.0;
        a = eig.eigenvectors() * coef;
    }
    const double f = lp_objective(sys, a);
    return finish(sys, std::move(a), 1, {f});
}

// p = 1 as a linear program: a = u − v, residual = e⁺ − e⁻,
// minimize Σ w(e⁺ + e⁻) subject to Σ(u + v) ≤ bound. Dense tableau simplex with
// Bland's rule; the residual slacks give a feasible starting basis.
Coefficients solve_l1(const WeightedSystem& sys) {
    const Eigen::Index r = sys.y.rows(), s = sys.y.cols();
    const Eigen::Index rows = r + 1, cols = 2 * s + 2 * r + 1;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(rows + 1, cols + 1);
    std::vector<Eigen::Index> basis(static_cast<std::size_t>(rows));
    Eigen::VectorXd cost = Eigen::VectorXd::Zero(cols);
    for (Eigen::Index i = 0; i < r; ++i) {
        const double sign = sys.z(i) >= 0.0 ? 1.0 : -1.0;
        t.row(i).segment(0, s) = sign * sys.y.row(i);
        t.row(i).segment(s, s) = -sign * sys.y.row(i);
        t(i, 2 * s + i) = -sign;
        t(i, 2 * s + r + i) = sign;
        t(i, cols) = sign * sys.z(i);
        basis[static_cast<std::size_t>(i)] = sign > 0.0 ? 2 * s + r + i : 2 * s + i;
        cost(2 * s + i) = cost(2 * s + r + i) = sys.weights(i);
    }
    t.row(r).segment(0, 2 * s).setOnes();
    t(r, cols - 1) = 1.0;
    t(r, cols) = sys.bound;
    basis[static_cast<std::size_t>(r)] = cols - 1;

    // objective row: reduced costs, and −(current objective) in the corner
    t.row(rows).head(cols) = cost.transpose();
    for (Eigen::Index i = 0; i < rows; ++i) t.row(rows) -= cost(basis[static_cast<std::size_t>(i)]) * t.row(i);

    const double scale = std::max({1.0, sys.weights.maxCoeff(), sys.y.cwiseAbs().maxCoeff(), sys.bound});
    const double tol = 1e-12 * scale;
    std::vector<double> trace{-t(rows, cols)};
    int pivots = 0;
    const int max_pivots = 1000 * static_cast<int>(rows + cols);
    for (; pivots < max_pivots; ++pivots) {
        Eigen::Index enter = -1;
        for (Eigen::Index j = 0; j < cols; ++j)
            if (t(rows, j) < -tol) {
                enter = j;
                break;
            }
        if (enter < 0) break;
        Eigen::Index leave = -1;
        double best = 0.0;
        for (Eigen::Index i = 0; i < rows; ++i) {
            if (t(i, enter) <= tol) continue;
            const double ratio = t(i, cols) / t(i, enter);
            if (leave < 0 || ratio < best - tol ||
                (ratio <= best + tol && basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
                leave = i;
                best = ratio;
            }
        }
        if (leave < 0) break;  // cannot happen: the objective is bounded below by 0
        t.row(leave) /= t(leave, enter);
        for (Eigen::Index i = 0; i <= rows; ++i)
            if (i != leave && t(i, enter) != 0.0) t.row(i) -= t(i, enter) * t.row(leave);
        basis[static_cast<std::size_t>(leave)] = enter;
        trace.push_back(std::max(0.0, -t(rows, cols)));
    }
    if (pivots == max_pivots) throw SolverError("simplex pivot limit reached", Coefficients{}, 0.0);

    Eigen::VectorXd a = Eigen::VectorXd::Zero(s);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Eigen::Index b = basis[static_cast<std::size_t>(i)];
        if (b < s) a(b) += t(i, cols);
        else if (b < 2 * s) a(b - s) -= t(i, cols);
    }
    return finish(sys, std::move(a), pivots, std::move(trace));
}

}  // namespace

double lp_objective(const WeightedSystem& sys, const Eigen::VectorXd& a) {
    const Eigen::VectorXd r = sys.y * a - sys.z;
    double f = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) f += sys.weights(i) * abs_pow(r(i), sys.p);
    return f;
}

Eigen::VectorXd project_lp_ball(const Eigen::VectorXd& v, double p, double b) {
    if (lp_norm(v, p) <= b) return v;
    if (p == 2.0) return v * (b / v.norm());
    auto shrunk = [&](double lambda) {
        Eigen::VectorXd x(v.size());
        for (Eigen::Index i = 0; i < v.size(); ++i) x(i) = std::copysign(shrink(std::abs(v(i)), lambda, p), v(i));
        return x;
    };
    double lo = 0.0, hi = 1.0;
    while (lp_norm(shrunk(hi), p) > b) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (lp_norm(shrunk(mid), p) > b ? lo : hi) = mid;
    }
    Eigen::VectorXd x = shrunk(hi);
    const double nm = lp_norm(x, p);
    if (nm > b) x *= b / nm;
    return x;
}

Coefficients solve_weighted_lp(const WeightedSystem& sys, const SolverOptions& opts) {
    sys.validate();
    if (!(opts.tol > 0.0)) throw ParameterError("solver tolerance must be positive");
    if (sys.p == 2.0) return solve_l2(sys);
    if (sys.p == 1.0) return solve_l1(sys);

    const double delta = 1e-8 * sys.bound;
    const Eigen::VectorXd start = solve_l2(WeightedSystem{sys.y, sys.z, sys.weights, 2.0, std::numeric_limits<double>::max()}).values;

    SmoothedProblem free_prob(sys, delta, 0.0);
    DescentResult res = run_irls(free_prob, start, opts);
    int iterations = res.iterations;
    bool converged = res.converged;

    if (lp_norm(res.a, sys.p) > sys.bound) {
        // Penalized problems: ‖a(λ)‖_p decreases in λ; find λ with ‖a(λ)‖_p = bound.
        const double scale = std::max(sys.weights.maxCoeff() * sys.y.squaredNorm(), 1e-300);
        double lo = 0.0, hi = 1e-6 * scale;
        Eigen::VectorXd a_hi = res.a;
        for (int it = 0; it < 200; ++it) {
            auto r = run_irls(SmoothedProblem(sys, delta, hi), a_hi, opts);
            iterations += r.iterations;
            a_hi = r.a;
            if (lp_norm(a_hi, sys.p) <= sys.bound) break;
            lo = hi;
            hi *= 4.0;
        }
        for (int it = 0; it < 100; ++it) {
            const double mid = lo == 0.0 ? hi / 2.0 : std::sqrt(lo * hi);
            auto r = run_irls(SmoothedProblem(sys, delta, mid), a_hi, opts);
            iterations += r.iterations;
            const double nm = lp_norm(r.a, sys.p);
            if (nm <= sys.bound) {
                hi = mid;
                a_hi = r.a;
            } else {
                lo = mid;
            }
            if (std::abs(nm - sys.bound) <= 1e-8 * sys.bound || (hi - lo) <= 1e-12 * hi) break;
        }
        auto polished = run_projected_gradient(free_prob, sys, project_lp_ball(a_hi, sys.p, sys.bound), opts);
        iterations += polished.iterations;
        converged = converged || polished.converged;
        res = std::move(polished);
    }

    Coefficients out = finish(sys, std::move(res.a), iterations, std::move(res.trace));
    if (!converged)
        throw SolverError("weighted lp solve did not converge in " + std::to_string(opts.max_iterations) + " iterations",
                          out, res.last_gap);
    return out;
}

std::vector<double> residual_weights(const Coefficients& a, const Dataset& data, double p) {
    for (auto c : a.coords)
        if (c >= data.d()) throw ParameterError("coefficient coordinate out of range");
    std::vector<double> w(data.size());
    for (std::size_t j = 0; j < data.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        w[j] = abs_pow(a.predict(data.y.row(jj)) - data.z(jj), p);
    }
    return w;
}

double conditional_loss_from_weights(std::span<const double> weights, const RowSet& rows, double p) {
    const std::size_t count = rows.count();
    if (count == 0) throw UndefinedError("conditional loss over zero covered rows is undefined");
    const double mean = rows.sum(weights) / static_cast<double>(count);
    if (p == 2.0) return std::sqrt(mean);
    if (p == 1.0) return mean;
    return std::pow(mean, 1.0 / p);
}

double conditional_empirical_loss(const Coefficients& a, const Dataset& data, const RowSet& rows, double p) {
    return conditional_loss_from_weights(residual_weights(a, data, p), rows, p);
}

double conditional_empirical_loss(const Coefficients& a, const Dataset& data, const Dnf& c, double p) {
    return conditional_empirical_loss(a, data, covered_rows(c, data.x), p);
}

}  // namespace condreg
