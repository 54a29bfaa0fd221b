#include <cmath>
#include <set>

#include "condreg/random.hpp"
#include "doctest.h"

using condreg::Rng;

TEST_SUITE("random") {
    TEST_CASE("engine is the standard 64-bit Mersenne twister") {
        // The standard fixes the 10000th output for the default seed.
        Rng r(5489);
        for (int i = 0; i < 9999; ++i) r.next_u64();
        CHECK(r.next_u64() == 9981545732273789042ULL);
    }

    TEST_CASE("same seed gives the same stream") {
        Rng a(42), b(42);
        for (int i = 0; i < 1000; ++i) {
            CHECK(a.uniform() == b.uniform());
            CHECK(a.normal() == b.normal());
            CHECK(a.below(17) == b.below(17));
        }
    }

    TEST_CASE("uniform lies in [0, 1)") {
        Rng r(1);
        double lo = 1.0, hi = 0.0, sum = 0.0;
        const int n = 200000;
        for (int i = 0; i < n; ++i) {
            const double u = r.uniform();
            lo = std::min(lo, u);
            hi = std::max(hi, u);
            sum += u;
        }
        CHECK(lo >= 0.0);
        CHECK(hi < 1.0);
        CHECK(std::abs(sum / n - 0.5) < 0.005);
    }

    TEST_CASE("below is roughly uniform") {
        Rng r(7);
        const int bins = 6, n = 60000;
        std::vector<int> count(bins, 0);
        for (int i = 0; i < n; ++i) ++count[r.below(bins)];
        double chi2 = 0.0;
        for (int c : count) chi2 += (c - n / bins) * (c - n / bins) / double(n / bins);
        CHECK(chi2 < 25.0);  // 5 dof, far in the tail
        CHECK(r.below(1) == 0);
        CHECK(r.below(0) == 0);
    }

    TEST_CASE("normal has unit variance") {
        Rng r(3);
        const int n = 200000;
        double s = 0.0, s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double v = r.normal();
            s += v;
            s2 += v * v;
        }
        CHECK(std::abs(s / n) < 0.01);
        CHECK(std::abs(s2 / n - 1.0) < 0.02);
    }

    TEST_CASE("split streams are deterministic and distinct") {
        Rng a(9), b(9);
        auto a1 = a.split(1), b1 = b.split(1);
        CHECK(a1.next_u64() == b1.next_u64());
        Rng c(9);
        auto c2 = c.split(2);
        Rng d(9);
        auto d1 = d.split(1);
        CHECK(c2.next_u64() != d1.next_u64());
    }
}
