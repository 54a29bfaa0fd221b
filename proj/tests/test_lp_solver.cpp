#include <cmath>
#include <random>

#include "condreg/error.hpp"
#include "condreg/lp_solver.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace condreg;

namespace {

WeightedSystem system_1d(std::initializer_list<std::pair<double, double>> rows, double p, double bound) {
    WeightedSystem s;
    s.y.resize(static_cast<Eigen::Index>(rows.size()), 1);
    s.z.resize(static_cast<Eigen::Index>(rows.size()));
    Eigen::Index i = 0;
    for (auto [y, z] : rows) {
        s.y(i, 0) = y;
        s.z(i) = z;
        ++i;
    }
    s.weights = Eigen::VectorXd::Ones(s.z.size());
    s.p = p;
    s.bound = bound;
    return s;
}

WeightedSystem random_system(std::mt19937_64& g, Eigen::Index rows, Eigen::Index s, double p, double bound) {
    WeightedSystem sys;
    sys.y = testing::random_gaussian(g, rows, s);
    sys.z = testing::random_gaussian(g, rows, 1).col(0) * 2.0;
    std::uniform_real_distribution<double> u(0.5, 4.0);
    sys.weights.resize(rows);
    for (Eigen::Index i = 0; i < rows; ++i) sys.weights(i) = u(g);
    sys.p = p;
    sys.bound = bound;
    return sys;
}

Dataset tiny_dataset(const Eigen::MatrixXd& y, const Eigen::VectorXd& z, std::size_t n = 1) {
    BoolMatrix x(static_cast<std::size_t>(z.size()), n);
    for (std::size_t i = 0; i < x.rows(); ++i) x.set(i, 0, true);
    return make_dataset(std::move(x), y, z);
}

}  // namespace

TEST_SUITE("lp_solver") {
    TEST_CASE("solver examples") {
        auto a = solve_weighted_lp(system_1d({{1, 2}, {2, 4}}, 2.0, 10.0));
        CHECK(a.values(0) == doctest::Approx(2.0).epsilon(1e-9));
        CHECK(a.objective == doctest::Approx(0.0).epsilon(1e-12));

        a = solve_weighted_lp(system_1d({{1, 2}, {2, 4}}, 2.0, 1.0));
        CHECK(a.values(0) == doctest::Approx(1.0).epsilon(1e-8));

        a = solve_weighted_lp(system_1d({{1, 0}, {1, 1}, {1, 10}}, 1.0, 100.0));
        CHECK(a.values(0) == doctest::Approx(1.0).epsilon(1e-5));
    }

    TEST_CASE("p = 2 agrees with the weighted normal equations") {
        std::mt19937_64 g(21);
        for (int rep = 0; rep < 50; ++rep) {
            const auto sys = random_system(g, 4 + rep % 5, 1 + rep % 3, 2.0, 1e6);
            const Eigen::MatrixXd w = sys.weights.asDiagonal();
            const Eigen::MatrixXd lhs = sys.y.transpose() * w * sys.y;
            const Eigen::VectorXd rhs = sys.y.transpose() * w * sys.z;
            const Eigen::VectorXd expect = lhs.ldlt().solve(rhs);
            const auto a = solve_weighted_lp(sys);
            CHECK((a.values - expect).norm() <= 1e-6 * std::max(1.0, expect.norm()));
        }
    }

    TEST_CASE("rank-deficient systems give the minimum-norm solution") {
        WeightedSystem sys;
        sys.y.resize(2, 2);
        sys.y << 1, 1, 2, 2;
        sys.z = Eigen::Vector2d(2, 4);
        sys.weights = Eigen::VectorXd::Ones(2);
        sys.bound = 100;
        const auto a = solve_weighted_lp(sys);
        CHECK(a.values(0) == doctest::Approx(1.0));
        CHECK(a.values(1) == doctest::Approx(1.0));
    }

    TEST_CASE("objective beats random feasible probes for every p") {
        std::mt19937_64 g(5);
        std::normal_distribution<double> nd(0.0, 1.0);
        for (double p : {1.0, 1.5, 2.0, 3.0}) {
            for (int rep = 0; rep < 10; ++rep) {
                CAPTURE(p);
                CAPTURE(rep);
                const double bound = rep % 2 ? 0.3 : 5.0;  // alternate active and inactive constraint
                const auto sys = random_system(g, 3 + rep % 4, 2 + rep % 2, p, bound);
                const auto a = solve_weighted_lp(sys);
                CHECK(lp_norm(a.values, p) <= bound * (1 + 1e-9));
                const double best = lp_objective(sys, a.values);
                CHECK(a.objective == doctest::Approx(best));
                for (int probe = 0; probe < 100; ++probe) {
                    Eigen::VectorXd v(a.values.size());
                    const double radius = probe < 50 ? 0.05 : 2.0;  // near and far probes
                    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = a.values(i) + radius * nd(g);
                    v = project_lp_ball(v, p, bound);
                    CHECK(best <= lp_objective(sys, v) * (1 + 1e-7) + 1e-9);
                }
            }
        }
    }

    TEST_CASE("descent trace is non-increasing") {
        std::mt19937_64 g(9);
        for (double p : {1.0, 1.5, 3.0}) {
            for (int rep = 0; rep < 10; ++rep) {
                const auto sys = random_system(g, 6, 3, p, rep % 2 ? 0.5 : 50.0);
                const auto a = solve_weighted_lp(sys);
                for (std::size_t i = 1; i < a.trace.size(); ++i) CHECK(a.trace[i] <= a.trace[i - 1] * (1 + 1e-12));
            }
        }
    }

    TEST_CASE("scaling the weights leaves the minimizer unchanged") {
        std::mt19937_64 g(13);
        for (double p : {1.5, 2.0, 3.0}) {
            auto sys = random_system(g, 5, 2, p, 10.0);
            const auto a = solve_weighted_lp(sys);
            sys.weights *= 7.5;
            const auto b = solve_weighted_lp(sys);
            CHECK((a.values - b.values).norm() <= 1e-5 * std::max(1.0, a.values.norm()));
            CHECK(b.objective == doctest::Approx(7.5 * a.objective).epsilon(1e-6));
        }
    }

    TEST_CASE("ball projection") {
        Eigen::VectorXd v(2);
        v << 3, 4;
        auto q = project_lp_ball(v, 2.0, 1.0);
        CHECK(q(0) == doctest::Approx(0.6));
        CHECK(q(1) == doctest::Approx(0.8));
        q = project_lp_ball(v, 1.0, 1.0);  // soft threshold by 3
        CHECK(q(0) == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(q(1) == doctest::Approx(1.0));
        CHECK(project_lp_ball(v, 3.0, 100.0) == v);
        for (double p : {1.0, 1.5, 2.5, 4.0}) CHECK(lp_norm(project_lp_ball(v, p, 0.7), p) <= 0.7 * (1 + 1e-9));
    }

    TEST_CASE("invalid systems are rejected") {
        auto sys = system_1d({{1, 2}}, 2.0, 1.0);
        sys.weights(0) = 0.0;
        CHECK_THROWS_AS(solve_weighted_lp(sys), ParameterError);
        sys = system_1d({{1, 2}}, 0.5, 1.0);
        CHECK_THROWS_AS(solve_weighted_lp(sys), ParameterError);
        sys = system_1d({{1, 2}}, 2.0, 0.0);
        CHECK_THROWS_AS(solve_weighted_lp(sys), ParameterError);
    }

    TEST_CASE("non-convergence carries the best iterate") {
        std::mt19937_64 g(3);
        const auto sys = random_system(g, 8, 3, 1.0, 0.2);
        SolverOptions opts;
        opts.max_iterations = 1;
        opts.tol = 1e-15;
        try {
            const auto a = solve_weighted_lp(sys, opts);
            CHECK(lp_norm(a.values, 1.0) <= 0.2 * (1 + 1e-9));
        } catch (const SolverError& e) {
            CHECK(e.best().values.size() == 3);
            CHECK(e.gap() >= 0.0);
        }
    }

    TEST_CASE("residual weights and conditional loss") {
        Eigen::MatrixXd y(2, 1);
        y << 1, 1;
        Eigen::VectorXd z(2);
        z << 1, -1;
        const auto data = tiny_dataset(y, z);
        Coefficients zero;
        zero.coords = {0};
        zero.values = Eigen::VectorXd::Zero(1);
        const auto w = residual_weights(zero, data, 2.0);
        CHECK(w == std::vector<double>{1.0, 1.0});
        const Dnf taut({Term({Literal{0, false}}), Term({Literal{0, true}})});
        CHECK(conditional_empirical_loss(zero, data, taut, 2.0) == 1.0);

        Coefficients a;
        a.coords = {0};
        a.values = Eigen::VectorXd::Constant(1, 4.0);
        CHECK(residual_weights(a, data, 2.0)[0] == 9.0);  // residual 3 squared
        RowSet first(2);
        first.set(0);
        CHECK(conditional_empirical_loss(a, data, first, 1.0) == 3.0);

        Coefficients exact;
        exact.coords = {0};
        exact.values = Eigen::VectorXd::Constant(1, 1.0);
        CHECK(conditional_empirical_loss(exact, data, first, 2.0) == 0.0);

        CHECK_THROWS_AS(conditional_empirical_loss(a, data, Dnf{}, 2.0), UndefinedError);
        Coefficients far;
        far.coords = {3};
        far.values = Eigen::VectorXd::Ones(1);
        CHECK_THROWS_AS(residual_weights(far, data, 2.0), ParameterError);
    }
}
