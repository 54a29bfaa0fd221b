#include <cmath>
#include <random>
#include <sstream>

#include "condreg/driver.hpp"
#include "condreg/error.hpp"
#include "doctest.h"
#include "oracle.hpp"
#include "support.hpp"

using namespace condreg;

namespace {

// n = 3 attributes cycling through all patterns; on x1 ∧ x2 (a quarter of the
// rows) z = 0.5·y1 exactly, elsewhere z is independent noise.
Dataset planted_instance(std::size_t m, std::uint64_t seed, double noise_scale = 1.0) {
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    BoolMatrix x(m, 3);
    Eigen::MatrixXd y(static_cast<Eigen::Index>(m), 2);
    Eigen::VectorXd z(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t a = 0; a < 3; ++a) x.set(i, a, ((i >> a) & 1U) != 0);
        const auto r = static_cast<Eigen::Index>(i);
        y(r, 0) = u(g);
        y(r, 1) = u(g);
        z(r) = (x.at(i, 0) && x.at(i, 1)) ? 0.5 * y(r, 0) : noise_scale * u(g);
    }
    return make_dataset(std::move(x), std::move(y), std::move(z));
}

const Term planted_term{{Literal{0, false}, Literal{1, false}}};

FitParams small_params(std::size_t m0) {
    FitParams p;
    p.sketch.s = 1;
    p.sketch.m0 = m0;
    p.sketch.fixed_weights = true;
    p.mu = 0.25;
    p.eps = 0.01;
    p.eta = 0.05;
    p.alpha = 2.0;
    p.k = 2;
    p.threads = 1;
    return p;
}

FitResult from_truth(const GroundTruth& t) {
    FitResult f;
    f.coefficients.coords = t.coords;
    f.coefficients.values = Eigen::Map<const Eigen::VectorXd>(t.coefficients.data(),
                                                               static_cast<Eigen::Index>(t.coefficients.size()));
    f.condition = t.dnf;
    f.p = 2.0;
    return f;
}

}  // namespace

TEST_SUITE("driver") {
    TEST_CASE("noiseless planted segment is fit exactly") {
        const auto data = planted_instance(64, 1);
        for (auto variant : {WtCondVariant::greedy, WtCondVariant::threshold}) {
            auto p = small_params(16);
            p.variant = variant;
            p.mode = SearchMode::exhaustive_best;
            const auto r = fit_conditional(data, p);
            REQUIRE(r);
            CHECK(r->loss < 1e-9);
            CHECK(r->coefficients.coords == std::vector<std::size_t>{0});
            CHECK(r->coefficients.values(0) == doctest::Approx(0.5).epsilon(1e-9));
            CHECK(r->condition.contains(planted_term));
            CHECK(r->covered == 16);
            CHECK(r->coverage == doctest::Approx(0.25));
        }
    }

    TEST_CASE("pure noise with a tiny eps is infeasible") {
        std::mt19937_64 g(2);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        BoolMatrix x = testing::random_bools(g, 60, 3);
        Eigen::MatrixXd y = testing::random_gaussian(g, 60, 2);
        Eigen::VectorXd z(60);
        for (auto& v : z) v = u(g);
        const auto data = make_dataset(std::move(x), std::move(y), std::move(z));
        auto p = small_params(12);
        p.eps = 1e-3;
        for (bool screen : {true, false}) {
            p.screen = screen;
            for (auto variant : {WtCondVariant::greedy, WtCondVariant::threshold}) {
                p.variant = variant;
                CHECK_FALSE(fit_conditional(data, p));
            }
        }
    }

    TEST_CASE("fit rejects a pool larger than the sample") {
        const auto data = planted_instance(16, 3);
        CHECK_THROWS_AS(fit_conditional(data, small_params(17)), ParameterError);
        auto p = small_params(8);
        p.sketch.s = 3;
        CHECK_THROWS_AS(fit_conditional(data, p), ParameterError);
        p = small_params(8);
        p.alpha = 0.5;
        CHECK_THROWS_AS(fit_conditional(data, p), ParameterError);
    }

    TEST_CASE("candidate screen examples") {
        const auto data = planted_instance(64, 4);
        const auto p = small_params(16);
        Coefficients planted;
        planted.coords = {0};
        planted.values = Eigen::VectorXd::Constant(1, 0.5);
        CHECK(candidate_screen(planted, data, p));

        // a = 0 and every |z| far above αε
        Eigen::VectorXd z = Eigen::VectorXd::Constant(64, 0.9);
        auto shifted = make_dataset(data.x, data.y, z);
        Coefficients zero;
        zero.coords = {0};
        zero.values = Eigen::VectorXd::Zero(1);
        CHECK_FALSE(candidate_screen(zero, shifted, p));
    }

    TEST_CASE("property: the screen never rejects a candidate that would pass") {
        std::mt19937_64 g(5);
        int passing = 0;
        for (int trial = 0; trial < 300; ++trial) {
            const std::size_t m = 30;
            const auto x = testing::random_bools(g, m, 3);
            auto w = testing::random_weights(g, m, 0.05);
            for (auto& v : w)
                if (g() % 3 == 0) v = 0.0;
            FitParams p;
            p.mu = 0.3;
            p.eps = 0.1;
            p.eta = 0.1;
            const double alpha = 1.5;
            const ConditionSearch search(x, 2);
            for (auto variant : {WtCondVariant::threshold, WtCondVariant::greedy}) {
                const auto c = search.run(variant, w, p.mu, p.eps * p.eps, p.eta);
                if (!c) continue;
                const double loss = conditional_loss_from_weights(w, c->rows, 2.0);
                if (loss > alpha * p.eps) continue;
                ++passing;
                CHECK(candidate_screen(w, p, alpha));
            }
        }
        CHECK(passing > 50);
    }

    TEST_CASE("reference class contains the query") {
        const auto data = planted_instance(64, 6);
        auto p = small_params(16);
        p.eta = 0.25;
        const auto q = testing::bits({1, 1, 0});
        const auto r = fit_reference_class(data, q, 0.2, 0.05, p);
        REQUIRE(r);
        CHECK(r->condition.satisfied_by(q));
        CHECK(static_cast<double>(r->covered) >= 0.2 / 1.25 * 64);
        CHECK(r->loss < 1e-6);
        CHECK_THROWS_AS(fit_reference_class(data, testing::bits({1, 1}), 0.2, 0.05, p), ParameterError);
    }

    TEST_CASE("reference class is absent when no light term holds at the query") {
        // z is large wherever x1 = 1, and every row with x1 = 1 differs from x1 = 0 rows
        const auto base = planted_instance(64, 7);
        Eigen::VectorXd z = base.z;
        Eigen::MatrixXd y = Eigen::MatrixXd::Zero(64, 2);
        for (Eigen::Index i = 0; i < 64; ++i) {
            y(i, 0) = 0.1;
            z(i) = base.x.at(static_cast<std::size_t>(i), 0) ? ((i % 2) ? 1.0 : -1.0) : 0.0;
        }
        const auto data = make_dataset(base.x, y, z);
        auto p = small_params(8);
        p.eta = 0.5;
        const auto r = fit_reference_class(data, testing::bits({1, 1, 1}), 0.5, 1e-3, p);
        CHECK_FALSE(r);
    }

    TEST_CASE("sup-norm baseline recovers an exact planted fit") {
        const auto data = planted_instance(64, 8);
        SupNormParams p;
        p.s = 1;
        p.eps_inf = 1e-6;
        p.mu = 0.25;
        p.eta = 0.0;
        p.m0 = 16;
        p.threads = 1;
        const auto r = fit_supnorm_baseline(data, p);
        REQUIRE(r);
        CHECK(r->condition == Dnf({planted_term}));
        CHECK(r->coefficients.values(0) == doctest::Approx(0.5).epsilon(1e-9));
        REQUIRE(r->sup_residual);
        CHECK(*r->sup_residual < 1e-9);
    }

    TEST_CASE("chebyshev fit is minimax") {
        std::mt19937_64 g(9);
        std::normal_distribution<double> nd(0.0, 1.0);
        for (int trial = 0; trial < 100; ++trial) {
            const Eigen::Index s = 1 + static_cast<Eigen::Index>(g() % 3);
            const Eigen::MatrixXd y = testing::random_gaussian(g, s + 1, s);
            const Eigen::VectorXd z = testing::random_gaussian(g, s + 1, 1).col(0);
            const Eigen::VectorXd a = chebyshev_fit(y, z);
            const Eigen::VectorXd res = y * a - z;
            const double h = res.cwiseAbs().maxCoeff();
            // equioscillation: every residual has magnitude h
            for (Eigen::Index i = 0; i <= s; ++i) CHECK(std::abs(res(i)) == doctest::Approx(h).epsilon(1e-8));
            for (int k = 0; k < 50; ++k) {
                Eigen::VectorXd b = a;
                for (Eigen::Index j = 0; j < s; ++j) b(j) += 0.1 * nd(g);
                CHECK((y * b - z).cwiseAbs().maxCoeff() >= h - 1e-12);
            }
        }
        CHECK_THROWS_AS(chebyshev_fit(Eigen::MatrixXd::Ones(3, 1), Eigen::VectorXd::Ones(3)), ParameterError);
    }

    TEST_CASE("evaluate: empty condition and tautology") {
        const auto data = planted_instance(32, 10);
        FitResult f;
        f.coefficients.coords = {0};
        f.coefficients.values = Eigen::VectorXd::Zero(1);
        const auto e = evaluate(f, data, data, false);
        CHECK(e.covered == 0);
        CHECK(e.coverage == 0.0);
        CHECK_FALSE(e.loss);

        f.condition = Dnf({Term({Literal{2, false}}), Term({Literal{2, true}})});
        const auto t = evaluate(f, data, data, false);
        CHECK(t.covered == 32);
        REQUIRE(t.loss);
        CHECK(*t.loss == doctest::Approx(std::sqrt(data.z.squaredNorm() / 32.0)));
    }

    TEST_CASE("evaluate: refit on the training rows") {
        const auto train = planted_instance(64, 11);
        const auto test = planted_instance(64, 12);
        FitResult f;
        f.coefficients.coords = {0};
        f.coefficients.values = Eigen::VectorXd::Constant(1, 0.1);
        f.condition = Dnf({planted_term});
        const auto raw = evaluate(f, train, test, false);
        const auto refit = evaluate(f, train, test, true);
        REQUIRE(raw.loss);
        REQUIRE(refit.loss);
        CHECK(*raw.loss > 0.05);
        CHECK(*refit.loss < 1e-6);
        CHECK(refit.covered == 16);
        CHECK_THROWS_AS(evaluate(f, train, planted_instance(64, 1).select_rows(std::vector<std::size_t>{}), false),
                        ParameterError);
    }

    TEST_CASE("evaluate: planted rule on fresh draws has MSE near the noise variance") {
        double total = 0.0;
        const int draws = 10;
        for (int seed = 100; seed < 100 + draws; ++seed) {
            auto spec = SyntheticSpec::preset("table2-row1");
            spec.seed = static_cast<std::uint64_t>(seed);
            const auto sd = generate_synthetic(spec);
            const auto e = evaluate(from_truth(sd.truth), sd.data, sd.data, false);
            REQUIRE(e.loss);
            total += *e.loss * *e.loss;
        }
        CHECK(total / draws == doctest::Approx(SyntheticSpec::preset("table2-row1").noise_variance).epsilon(0.1));
    }

    TEST_CASE("rc curve rows") {
        // every row follows the rule, so full coverage is attainable
        auto data = planted_instance(32, 13);
        Eigen::VectorXd z = 0.5 * data.y.col(0);
        data = make_dataset(data.x, data.y, z);
        auto p = small_params(8);
        const std::vector<double> one{1.0};
        const auto rows = rc_curve(data, data, one, p, false);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].coverage == 1.0);
        CHECK(rows[0].status == "ok");

        const std::vector<double> dup{0.5, 0.5, 0.25};
        const auto three = rc_curve(data, data, dup, p, true);
        REQUIRE(three.size() == 3);
        CHECK(three[0].mu == three[1].mu);
        CHECK(three[0].coverage == three[1].coverage);

        const std::vector<double> up{0.25, 0.5};
        CHECK_THROWS_AS(rc_curve(data, data, up, p), ParameterError);

        std::ostringstream csv;
        write_rc_csv(csv, three);
        std::istringstream lines(csv.str());
        std::string line;
        std::getline(lines, line);
        CHECK(line == "mu,coverage,loss,status");
        int n = 0;
        while (std::getline(lines, line)) ++n;
        CHECK(n == 3);
    }

    TEST_CASE("rc csv writes undefined loss as an empty field") {
        std::vector<RcRow> rows{{0.5, 0.0, std::nullopt, "infeasible"}, {0.25, 0.3, 0.125, "ok"}};
        std::ostringstream csv;
        write_rc_csv(csv, rows);
        CHECK(csv.str() == "mu,coverage,loss,status\n0.5,0,,infeasible\n0.25,0.3,0.125,ok\n");
    }

    TEST_CASE("best mode is never worse than first mode") {
        for (std::uint64_t seed = 20; seed < 25; ++seed) {
            const auto data = planted_instance(64, seed, 0.3);
            auto p = small_params(12);
            p.eps = 0.15;
            p.alpha = 3.0;
            p.mode = SearchMode::first_found;
            const auto first = fit_conditional(data, p);
            p.mode = SearchMode::exhaustive_best;
            const auto best = fit_conditional(data, p);
            REQUIRE(first.has_value() == best.has_value());
            if (first) CHECK(best->loss <= first->loss);
        }
    }

    TEST_CASE("fit results are identical across thread counts") {
        auto spec = SyntheticSpec::preset("table2-row1");
        spec.seed = 3;
        const auto sd = generate_synthetic(spec);
        FitParams p;
        p.sketch.m0 = 200;
        p.sketch.fixed_weights = true;
        p.sketch.candidate_budget = 300;
        p.sketch.seed = 17;
        p.mu = 0.22;
        p.eps = 0.13;
        p.alpha = 1.5;
        p.eta = 0.05;
        for (auto mode : {SearchMode::first_found, SearchMode::exhaustive_best}) {
            p.mode = mode;
            std::string reference;
            for (unsigned threads : {1U, 2U, 3U}) {
                p.threads = threads;
                const auto r = fit_conditional(sd.data, p);
                const std::string bytes = r ? to_json(*r).dump() : "null";
                if (reference.empty()) reference = bytes;
                CHECK(bytes == reference);
            }
        }
    }

    TEST_CASE("fit result json round trip uses 1-based indices") {
        const auto data = planted_instance(64, 1);
        auto p = small_params(16);
        p.mode = SearchMode::exhaustive_best;
        const auto r = fit_conditional(data, p);
        REQUIRE(r);
        const auto j = to_json(*r);
        CHECK(j["coords"] == nlohmann::json::array({1}));
        CHECK(j["dnf"]["terms"].size() == r->condition.size());
        for (const auto& e : j["candidate"]["examples"]) CHECK(e.get<int>() >= 1);
        const auto back = fit_result_from_json(j);
        CHECK(back.coefficients.coords == r->coefficients.coords);
        CHECK(back.coefficients.values == r->coefficients.values);
        CHECK(back.condition == r->condition);
        CHECK(back.candidate == r->candidate);
        CHECK(back.loss == r->loss);
        CHECK(to_json(back) == j);

        auto bad = j;
        bad["coords"] = nlohmann::json::array({0});
        CHECK_THROWS_AS(fit_result_from_json(bad), ParseError);
    }

    TEST_CASE("exhaustive best matches a brute-force oracle on tiny instances") {
        std::mt19937_64 g(2024);
        int feasible = 0;
        for (int trial = 0; trial < 15; ++trial) {
            const auto data = testing::tiny_instance(g);
            testing::OracleSetup o;
            FitParams p;
            p.sketch.s = 1;
            p.sketch.p = 2.0;
            p.sketch.gamma = 1.0;
            p.sketch.r = 2;
            p.sketch.m0 = data.size();
            p.mu = o.mu;
            p.eps = o.eps;
            p.eta = o.eta;
            p.alpha = o.alpha;
            p.k = 1;
            p.variant = WtCondVariant::threshold;
            p.mode = SearchMode::exhaustive_best;
            p.threads = 1;
            const auto expect = testing::brute_force_fit(data, o);
            const auto got = fit_conditional(data, p);
            REQUIRE(expect.has_value() == got.has_value());
            if (!got) continue;
            ++feasible;
            CHECK(got->loss == doctest::Approx(expect->loss).epsilon(1e-6));
            CHECK(expect->coverages.count(got->covered) == 1);
        }
        CHECK(feasible > 3);
    }
}
