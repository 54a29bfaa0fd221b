#pragma once

// Shared helpers for the unit tests: small random instance generators that do
// not go through the library's own RNG.

#include <cstdint>
#include <random>
#include <vector>

#include "condreg/bool_matrix.hpp"
#include "condreg/dataset.hpp"

namespace testing {

inline condreg::BoolMatrix random_bools(std::mt19937_64& g, std::size_t m, std::size_t n) {
    condreg::BoolMatrix x(m, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) x.set(i, j, (g() >> 63) != 0);
    return x;
}

inline std::vector<double> random_weights(std::mt19937_64& g, std::size_t m, double hi = 1.0) {
    std::uniform_real_distribution<double> u(0.0, hi);
    std::vector<double> w(m);
    for (auto& v : w) v = u(g);
    return w;
}

inline Eigen::MatrixXd random_gaussian(std::mt19937_64& g, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::MatrixXd a(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = nd(g);
    return a;
}

inline condreg::BoolMatrix bools(std::initializer_list<std::initializer_list<int>> rows) {
    const std::size_t m = rows.size();
    const std::size_t n = m ? rows.begin()->size() : 0;
    condreg::BoolMatrix x(m, n);
    std::size_t i = 0;
    for (const auto& r : rows) {
        std::size_t j = 0;
        for (int v : r) x.set(i, j++, v != 0);
        ++i;
    }
    return x;
}

inline std::vector<std::uint8_t> bits(std::initializer_list<int> v) { return {v.begin(), v.end()}; }

}  // namespace testing
