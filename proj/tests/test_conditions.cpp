#include <algorithm>
#include <random>
#include <set>

#include "condreg/conditions.hpp"
#include "condreg/error.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace condreg;
using testing::bits;
using testing::bools;

namespace {

Term term(std::initializer_list<int> signed_literals) {
    std::vector<Literal> lits;
    for (int c : signed_literals) lits.push_back(Literal::from_signed(c));
    return Term(lits);
}

// Σ_{j≤k} C(n,j)·2^j via Pascal's triangle.
std::uint64_t term_count_oracle(std::size_t n, std::size_t k) {
    std::vector<std::vector<std::uint64_t>> c(n + 1, std::vector<std::uint64_t>(n + 1, 0));
    for (std::size_t i = 0; i <= n; ++i) {
        c[i][0] = 1;
        for (std::size_t j = 1; j <= i; ++j) c[i][j] = c[i - 1][j - 1] + (j < i ? c[i - 1][j] : 0);
    }
    std::uint64_t total = 0;
    for (std::size_t j = 1; j <= k; ++j) total += c[n][j] << j;
    return total;
}

}  // namespace

TEST_SUITE("conditions") {
    TEST_CASE("literal signed encoding") {
        CHECK(Literal::from_signed(3).attribute == 2);
        CHECK_FALSE(Literal::from_signed(3).negated);
        CHECK(Literal::from_signed(-1).negated);
        CHECK(Literal{4, true}.to_signed() == -5);
        CHECK_THROWS_AS(Literal::from_signed(0), ParameterError);
    }

    TEST_CASE("term validation") {
        CHECK_THROWS_AS(Term({}), ParameterError);
        CHECK_THROWS_AS(term({1, 1}), ParameterError);
        CHECK_THROWS_AS(term({1, -1}), ParameterError);
        CHECK(term({3, -1}).literals().front().attribute == 0);
    }

    TEST_CASE("enumerate_terms examples") {
        const auto t21 = enumerate_terms(2, 1);
        REQUIRE(t21.size() == 4);
        CHECK(t21[0] == term({1}));
        CHECK(t21[1] == term({-1}));
        CHECK(t21[2] == term({2}));
        CHECK(t21[3] == term({-2}));
        CHECK(enumerate_terms(10, 2).size() == 200);
        CHECK(enumerate_terms(1, 1).size() == 2);
        CHECK_THROWS_AS(enumerate_terms(0, 1), ParameterError);
        CHECK_THROWS_AS(enumerate_terms(2, 3), ParameterError);
        CHECK_THROWS_AS(enumerate_terms(2, 0), ParameterError);
    }

    TEST_CASE("term count formula, exhaustive for n <= 12") {
        for (std::size_t n = 1; n <= 12; ++n)
            for (std::size_t k = 1; k <= n; ++k) {
                CAPTURE(n);
                CAPTURE(k);
                const auto expect = term_count_oracle(n, k);
                CHECK(term_count(n, k) == expect);
                if (n <= 8 || k <= 3) CHECK(enumerate_terms(n, k).size() == expect);
            }
        CHECK(enumerate_terms(12, 12).size() == 531440);  // 3^12 − 1
    }

    TEST_CASE("enumeration is strictly increasing and repeatable") {
        const auto a = enumerate_terms(5, 3);
        const auto b = enumerate_terms(5, 3);
        CHECK(a == b);
        for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i - 1] < a[i]);
        std::set<std::string> names;
        for (const auto& t : a) names.insert(t.to_string());
        CHECK(names.size() == a.size());
    }

    TEST_CASE("term_satisfies examples") {
        CHECK(term_satisfies(term({1, -2}), bits({1, 0})));
        CHECK_FALSE(term_satisfies(term({1, -2}), bits({1, 1})));
        CHECK(term_satisfies(term({3}), bits({0, 0, 1})));
        CHECK_THROWS_AS(term_satisfies(term({3}), bits({0, 1})), ParameterError);
    }

    TEST_CASE("dnf_satisfies examples") {
        CHECK_FALSE(dnf_satisfies(Dnf{}, bits({1, 0})));
        const Dnf taut({term({1}), term({-1})});
        CHECK(dnf_satisfies(taut, bits({0})));
        CHECK(dnf_satisfies(taut, bits({1})));
        CHECK_FALSE(dnf_satisfies(Dnf({term({1, 2})}), bits({1, 0})));
        CHECK_THROWS_AS(Dnf({term({1}), term({1})}), ParameterError);
    }

    TEST_CASE("dnf semantics match a truth table for n <= 4") {
        std::mt19937_64 g(11);
        for (std::size_t n = 1; n <= 4; ++n) {
            const auto all = enumerate_terms(n, n);
            for (int rep = 0; rep < 30; ++rep) {
                Dnf c;
                std::vector<Term> picked;
                for (const auto& t : all)
                    if (g() % 5 == 0) {
                        c.add(t);
                        picked.push_back(t);
                    }
                for (std::uint32_t mask = 0; mask < (1U << n); ++mask) {
                    std::vector<std::uint8_t> x(n);
                    for (std::size_t i = 0; i < n; ++i) x[i] = (mask >> i) & 1U;
                    bool expect = false;
                    for (const auto& t : picked) {
                        bool sat = true;
                        for (const auto& l : t.literals()) sat = sat && ((x[l.attribute] == 1) != l.negated);
                        expect = expect || sat;
                    }
                    CHECK(dnf_satisfies(c, x) == expect);
                }
            }
        }
    }

    TEST_CASE("dnf keeps a canonical order") {
        Dnf a, b;
        a.add(term({1, 2}));
        a.add(term({-3}));
        b.add(term({-3}));
        b.add(term({1, 2}));
        CHECK(a == b);
        CHECK(a.terms().front() == term({-3}));
        CHECK_FALSE(a.add(term({2, 1})));
        CHECK(a.size() == 2);
    }

    TEST_CASE("coverage examples") {
        const auto x = bools({{1}, {0}, {1}});
        auto cov = coverage(Dnf({term({1})}), x);
        CHECK(cov.count == 2);
        CHECK(cov.fraction == doctest::Approx(2.0 / 3.0));
        cov = coverage(Dnf{}, x);
        CHECK(cov.count == 0);
        CHECK(cov.fraction == 0.0);
        const auto x5 = bools({{1}, {0}, {1}, {0}, {0}});
        cov = coverage(Dnf({term({1}), term({-1})}), x5);
        CHECK(cov.count == 5);
        CHECK(cov.fraction == 1.0);
        CHECK_THROWS_AS(coverage(Dnf{}, BoolMatrix(0, 1)), ParameterError);
    }

    TEST_CASE("adding a term never lowers coverage") {
        std::mt19937_64 g(5);
        const auto terms = enumerate_terms(4, 2);
        for (int rep = 0; rep < 100; ++rep) {
            const auto x = testing::random_bools(g, 20, 4);
            Dnf c;
            for (int i = 0; i < 3; ++i) c.add(terms[g() % terms.size()]);
            const auto before = covered_rows(c, x);
            c.add(terms[g() % terms.size()]);
            const auto after = covered_rows(c, x);
            for (std::size_t j = 0; j < x.rows(); ++j)
                if (before.test(j)) CHECK(after.test(j));
        }
    }

    TEST_CASE("term index row sets agree with direct evaluation") {
        std::mt19937_64 g(8);
        const auto x = testing::random_bools(g, 150, 5);
        const TermIndex idx(enumerate_terms(5, 2), x);
        for (std::size_t t = 0; t < idx.size(); ++t) {
            std::size_t count = 0;
            for (std::size_t j = 0; j < x.rows(); ++j) {
                const bool sat = idx.term(t).satisfied_by(x.row(j));
                CHECK(idx.rows(t).test(j) == sat);
                count += sat;
            }
            CHECK(idx.row_count(t) == count);
        }
    }

    TEST_CASE("dnf json round trip") {
        const Dnf c({term({1, -3}), term({2})});
        const auto j = to_json(c);
        CHECK(j.dump() == R"({"terms":[[2],[1,-3]]})");
        CHECK(dnf_from_json(j) == c);
        CHECK(dnf_from_json(nlohmann::json::parse(R"({"terms":[]})")).empty());
        CHECK_THROWS(dnf_from_json(nlohmann::json::parse(R"({"terms":[[0]]})")));
    }
}
